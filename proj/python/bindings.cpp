#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gnncert/bench.hpp"
#include "gnncert/bnb.hpp"
#include "gnncert/error.hpp"
#include "gnncert/io.hpp"
#include "gnncert/mip.hpp"

namespace py = pybind11;
using namespace gnncert;

namespace {

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

Adjacency adjacency_arg(const GraphInstance& graph, const std::optional<Eigen::MatrixXd>& dense) {
  return dense ? Adjacency::from_dense(*dense) : graph.adjacency;
}

}  // namespace

PYBIND11_MODULE(_gnncert, m) {
  m.doc() = "Exact robustness verification of message-passing networks under edge perturbations";

  py::register_exception<Error>(m, "GnncertError", PyExc_ValueError);

  py::class_<MPNNModel>(m, "Model")
      .def_static("from_json", &parse_model, py::arg("text"))
      .def_static("load", &load_model, py::arg("path"))
      .def("to_json", &model_to_json)
      .def_property_readonly("input_dim", &MPNNModel::input_dim)
      .def_property_readonly("num_classes", &MPNNModel::num_classes)
      .def_property_readonly("num_layers", &MPNNModel::num_mp_layers)
      .def(
          "forward",
          [](const MPNNModel& model, const Eigen::MatrixXd& features, const Eigen::MatrixXd& adjacency) {
            return forward(model, features, Adjacency::from_dense(adjacency));
          },
          py::arg("features"), py::arg("adjacency"));

  py::class_<GraphInstance>(m, "Graph")
      .def_static("from_json", &parse_graph, py::arg("text"))
      .def_static("load", &load_graph, py::arg("path"))
      .def("to_json", &graph_to_json)
      .def_property_readonly("num_nodes", &GraphInstance::num_nodes)
      .def_readonly("features", &GraphInstance::features)
      .def_property_readonly("adjacency", [](const GraphInstance& g) { return g.adjacency.to_dense(); })
      .def_readonly("directed", &GraphInstance::directed)
      .def_readonly("label_true", &GraphInstance::label_true)
      .def_readonly("label_attack", &GraphInstance::label_attack)
      .def_property_readonly("target", [](const GraphInstance& g) { return g.target.node; });

  py::class_<PerturbationSpec>(m, "Spec")
      .def_static("from_json", &parse_spec, py::arg("text"), py::arg("graph"))
      .def_static("load", &load_spec, py::arg("path"), py::arg("graph"))
      .def("to_json", &spec_to_json)
      .def_readonly("global_budget", &PerturbationSpec::global_budget)
      .def_readonly("local_budgets", &PerturbationSpec::local_budgets)
      .def_property_readonly("mode", [](const PerturbationSpec& s) {
        return s.mode == PerturbationMode::UndirectedFlip ? "p1" : "p2";
      });

  m.def(
      "margin",
      [](const MPNNModel& model, const GraphInstance& graph, const std::optional<Eigen::MatrixXd>& adjacency) {
        return margin(model, graph, adjacency_arg(graph, adjacency));
      },
      py::arg("model"), py::arg("graph"), py::arg("adjacency") = py::none(),
      "f_true - f_attack at the target; A* unless an adjacency is given");

  m.def(
      "is_admissible",
      [](const GraphInstance& graph, const PerturbationSpec& spec, const Eigen::MatrixXd& adjacency) {
        return is_admissible(Adjacency::from_dense(adjacency), graph.adjacency, spec);
      },
      py::arg("graph"), py::arg("spec"), py::arg("adjacency"));

  m.def(
      "verify",
      [](const MPNNModel& model, const GraphInstance& graph, const PerturbationSpec& spec,
         const std::string& strategy, double time_limit, long long node_limit, std::uint64_t seed,
         int attack_restarts, int threads, bool deterministic) {
        SearchConfig cfg;
        cfg.strategy = parse_strategy(strategy);
        cfg.time_limit = time_limit;
        cfg.node_limit = node_limit;
        cfg.seed = seed;
        cfg.attack_restarts = attack_restarts;
        cfg.threads = threads;
        Verdict v;
        {
          py::gil_scoped_release release;
          v = verify(model, graph, spec, cfg);
        }
        return json_loads(verdict_to_json(v, graph, spec, {deterministic, "{}"}));
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("strategy") = "abt",
      py::arg("time_limit") = 7200.0, py::arg("node_limit") = 10'000'000LL, py::arg("seed") = 0,
      py::arg("attack_restarts") = 4, py::arg("threads") = 1, py::arg("deterministic") = false,
      "Branch-and-bound decision; returns the report as a dict");

  m.def(
      "bounds",
      [](const MPNNModel& model, const GraphInstance& graph, const PerturbationSpec& spec,
         const std::string& strategy) {
        return json_loads(bounds_to_json(propagate(model, graph, spec, parse_strategy(strategy))));
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("strategy") = "sbt");

  m.def(
      "export_lp",
      [](const MPNNModel& model, const GraphInstance& graph, const PerturbationSpec& spec,
         const std::string& strategy, bool merge_pairs) {
        const BoundsTable bounds = propagate(model, graph, spec, parse_strategy(strategy));
        return to_lp_string(encode(model, graph, spec, bounds, {merge_pairs}));
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("strategy") = "sbt",
      py::arg("merge_pairs") = false, "Big-M MIP as CPLEX-LP text");

  m.def(
      "brute_force",
      [](const MPNNModel& model, const GraphInstance& graph, const PerturbationSpec& spec, long long cap) {
        const BruteForceResult r = brute_force_verdict(model, graph, spec, cap);
        return py::make_tuple(r.min_margin, r.argmin.to_dense(), r.enumerated);
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("cap") = 1'000'000LL,
      "(min margin, argmin adjacency, number enumerated)");

  m.def(
      "attack",
      [](const MPNNModel& model, const GraphInstance& graph, const PerturbationSpec& spec, int restarts,
         std::uint64_t seed) -> std::optional<Eigen::MatrixXd> {
        auto a = attack_search(model, graph, spec, restarts, seed);
        if (!a) return std::nullopt;
        return a->to_dense();
      },
      py::arg("model"), py::arg("graph"), py::arg("spec"), py::arg("restarts") = 8, py::arg("seed") = 0);

  m.def("sgm", &sgm, py::arg("times"), py::arg("shift") = 10.0, "shifted geometric mean");
}
