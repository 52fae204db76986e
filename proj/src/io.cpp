#include "gnncert/io.hpp"

#include <fstream>
#include <sstream>

#include "gnncert/error.hpp"
#include "json.hpp"

namespace gnncert {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) fail(std::string("expected an object holding '") + key + "'");
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const char* what) {
  if (!j.is_number_integer()) fail(std::string(what) + ": expected an integer");
  return j.get<int>();
}

Eigen::MatrixXd matrix(const json& j, const char* what, int expected_rows = -1) {
  if (!j.is_array()) fail(std::string(what) + ": expected a list of rows");
  const int rows = static_cast<int>(j.size());
  if (expected_rows >= 0 && rows != expected_rows) fail(std::string(what) + ": wrong number of rows");
  int cols = rows > 0 && j[0].is_array() ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) fail(std::string(what) + ": ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = number(j[r][c], what);
  }
  return m;
}

Eigen::VectorXd vector(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + ": expected a list");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

MPNNLayer layer_from(const json& j) {
  MPNNLayer layer;
  layer.w_self = matrix(field(j, "w_self"), "w_self");
  if (j.contains("w_neigh")) {
    layer.w_neigh = matrix(j["w_neigh"], "w_neigh");
  } else {
    layer.w_neigh = Eigen::MatrixXd::Zero(layer.w_self.rows(), layer.w_self.cols());
  }
  layer.bias = vector(field(j, "bias"), "bias");
  const json& act = field(j, "activation");
  if (act == "relu") {
    layer.activation = Activation::ReLU;
  } else if (act == "identity") {
    layer.activation = Activation::Identity;
  } else {
    fail("activation must be \"relu\" or \"identity\"");
  }
  return layer;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json layer_json(const MPNNLayer& layer) {
  json bias = json::array();
  for (Eigen::Index i = 0; i < layer.bias.size(); ++i) bias.push_back(layer.bias(i));
  return {{"w_self", matrix_json(layer.w_self)},
          {"w_neigh", matrix_json(layer.w_neigh)},
          {"bias", bias},
          {"activation", layer.activation == Activation::ReLU ? "relu" : "identity"}};
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(e.what());
  }
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

}  // namespace

MPNNModel parse_model(const std::string& text) {
  const json j = parse(text);
  MPNNModel model;
  const json& layers = field(j, "layers");
  if (!layers.is_array()) fail("layers: expected a list");
  for (const auto& l : layers) model.mp_layers.push_back(layer_from(l));
  if (j.contains("pooling")) {
    if (j["pooling"] == "add") {
      model.pooling = Pooling::Add;
    } else if (j["pooling"] == "none") {
      model.pooling = Pooling::None;
    } else {
      fail("pooling must be \"none\" or \"add\"");
    }
  }
  if (j.contains("dense")) {
    if (!j["dense"].is_array()) fail("dense: expected a list");
    for (const auto& l : j["dense"]) model.dense_head.push_back(layer_from(l));
  }
  model.validate();
  return model;
}

GraphInstance parse_graph(const std::string& text) {
  const json j = parse(text);
  const int n = integer(field(j, "n"), "n");
  if (n < 0) fail("n must be nonnegative");
  GraphInstance g;
  g.directed = j.value("directed", false);
  g.features = matrix(field(j, "features"), "features", n);

  std::vector<std::pair<int, int>> edges;
  const json& e = field(j, "edges");
  if (!e.is_array()) fail("edges: expected a list");
  for (const auto& pair : e) {
    if (!pair.is_array() || pair.size() != 2) fail("edges: expected [u, v] pairs");
    edges.emplace_back(integer(pair[0], "edge"), integer(pair[1], "edge"));
  }
  g.adjacency = Adjacency::from_edges(n, edges, g.directed);

  const json& target = field(j, "target");
  if (target == "graph") {
    g.target = Target::graph();
  } else if (target.is_object()) {
    g.target = Target::of_node(integer(field(target, "node"), "target.node"));
  } else {
    fail("target must be \"graph\" or {\"node\": t}");
  }
  g.label_true = integer(field(j, "label_true"), "label_true");
  g.label_attack = integer(field(j, "label_attack"), "label_attack");
  return g;
}

PerturbationSpec parse_spec(const std::string& text, const GraphInstance& graph) {
  const json j = parse(text);
  PerturbationSpec spec;
  const json& mode = field(j, "mode");
  if (mode == "p1") {
    spec.mode = PerturbationMode::UndirectedFlip;
  } else if (mode == "p2") {
    spec.mode = PerturbationMode::DirectedRemoveOnly;
  } else {
    fail("mode must be \"p1\" or \"p2\"");
  }
  spec.global_budget = integer(field(j, "global_budget"), "global_budget");
  if (j.contains("local_budgets")) {
    const json& q = j["local_budgets"];
    if (!q.is_array()) fail("local_budgets: expected a list");
    for (const auto& x : q) spec.local_budgets.push_back(integer(x, "local_budgets"));
  } else if (j.contains("local_rule")) {
    const int s = integer(field(j["local_rule"], "strength"), "local_rule.strength");
    spec.local_budgets = local_budget_from_degree(node_degrees(graph.adjacency), s);
  } else {
    fail("spec needs local_budgets or local_rule");
  }
  spec.tight_root_budget = j.value("tight_root_budget", false);
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

MPNNModel load_model(const std::string& path) { return parse_model(read_file(path)); }
GraphInstance load_graph(const std::string& path) { return parse_graph(read_file(path)); }
PerturbationSpec load_spec(const std::string& path, const GraphInstance& graph) {
  return parse_spec(read_file(path), graph);
}

std::string model_to_json(const MPNNModel& model) {
  json layers = json::array();
  for (const auto& l : model.mp_layers) layers.push_back(layer_json(l));
  json dense = json::array();
  for (const auto& l : model.dense_head) dense.push_back(layer_json(l));
  return json{{"layers", layers}, {"pooling", model.pooling == Pooling::Add ? "add" : "none"}, {"dense", dense}}
      .dump();
}

std::string graph_to_json(const GraphInstance& graph) {
  json edges = json::array();
  for (auto [u, v] : graph.directed ? graph.adjacency.edges() : graph.adjacency.undirected_edges())
    edges.push_back({u, v});
  json target = graph.target.is_graph() ? json("graph") : json{{"node", *graph.target.node}};
  return json{{"n", graph.num_nodes()},
              {"directed", graph.directed},
              {"features", matrix_json(graph.features)},
              {"edges", edges},
              {"target", target},
              {"label_true", graph.label_true},
              {"label_attack", graph.label_attack}}
      .dump();
}

std::string spec_to_json(const PerturbationSpec& spec) {
  return json{{"mode", spec.mode == PerturbationMode::UndirectedFlip ? "p1" : "p2"},
              {"global_budget", spec.global_budget},
              {"local_budgets", spec.local_budgets},
              {"tight_root_budget", spec.tight_root_budget}}
      .dump();
}

std::string verdict_to_json(const Verdict& verdict, const GraphInstance& graph, const PerturbationSpec& spec,
                            const ReportOptions& options) {
  json witness = json::array();
  if (verdict.witness) {
    const Adjacency& a = *verdict.witness;
    const int n = graph.num_nodes();
    const bool undirected = spec.mode == PerturbationMode::UndirectedFlip;
    for (int u = 0; u < n; ++u)
      for (int v = undirected ? u + 1 : 0; v < n; ++v)
        if (u != v && a(u, v) != graph.adjacency(u, v)) witness.push_back({u, v});
  }
  json report{{"status", to_string(verdict.status)},
              {"certified_bound", verdict.certified_bound ? json(*verdict.certified_bound) : json(nullptr)},
              {"witness_edges", witness},
              {"witness_margin", verdict.witness_margin ? json(*verdict.witness_margin) : json(nullptr)},
              {"nodes_explored", verdict.stats.nodes_explored},
              {"max_depth", verdict.stats.max_depth},
              {"time_seconds", options.deterministic ? 0.0 : verdict.stats.time_seconds},
              {"strategy", to_string(verdict.stats.strategy)},
              {"config", parse(options.config_json)}};
  return report.dump(2) + "\n";
}

std::string bounds_to_json(const BoundsTable& bounds) {
  json records = json::array();
  for (std::size_t l = 0; l < bounds.preact.size(); ++l) {
    const IntervalGrid& pre = bounds.preact[l];
    const IntervalGrid& post = bounds.postact[l];
    for (int v = 0; v < pre.rows(); ++v)
      for (int f = 0; f < pre.cols(); ++f)
        records.push_back({{"layer", l + 1},
                           {"node", v},
                           {"feature", f},
                           {"pre", interval_json(pre.at(v, f))},
                           {"post", interval_json(post.at(v, f))}});
  }
  json pooled = json::array();
  for (const auto& i : bounds.pooled) pooled.push_back(interval_json(i));
  json dense = json::array();
  for (std::size_t k = 0; k < bounds.dense_pre.size(); ++k)
    for (std::size_t f = 0; f < bounds.dense_pre[k].size(); ++f)
      dense.push_back({{"layer", k + 1},
                       {"feature", f},
                       {"pre", interval_json(bounds.dense_pre[k][f])},
                       {"post", interval_json(bounds.dense_post[k][f])}});
  json out{{"strategy", to_string(bounds.strategy)},
           {"records", records},
           {"pooled", pooled},
           {"dense", dense},
           {"margin", interval_json(bounds.margin)}};
  return out.dump(2) + "\n";
}

}  // namespace gnncert
