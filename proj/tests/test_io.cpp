#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "fixtures.hpp"
#include "gnncert/error.hpp"
#include "gnncert/io.hpp"
#include "json.hpp"
#include "support/oracles.hpp"

using namespace gnncert;
using nlohmann::json;

#ifndef GNNCERT_TEST_DATA
#define GNNCERT_TEST_DATA "tests/data"
#endif

namespace {

const std::string kData = GNNCERT_TEST_DATA;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::EmptyInput;
}

const GraphInstance& path() {
  static const GraphInstance g = parse_graph(read_file(kData + "/path_graph.json"));
  return g;
}

}  // namespace

TEST_CASE("fixture files load") {
  const MPNNModel m = load_model(kData + "/path_model.json");
  REQUIRE(m.mp_layers.size() == 1);
  CHECK(m.mp_layers[0].w_self(0, 0) == 1);
  CHECK(m.pooling == Pooling::None);
  const GraphInstance& g = path();
  CHECK(g.num_nodes() == 3);
  CHECK(!g.directed);
  CHECK(g.adjacency(1, 0));
  CHECK(g.adjacency(0, 1));
  CHECK(!g.adjacency(0, 2));
  CHECK(*g.target.node == 0);
  const PerturbationSpec s = load_spec(kData + "/path_spec.json", g);
  CHECK(s.mode == PerturbationMode::UndirectedFlip);
  CHECK(s.global_budget == 1);
  CHECK(s.local_budgets == std::vector<int>{1, 1, 1});
  CHECK(!s.tight_root_budget);
}

TEST_CASE("local rule resolves against degrees") {
  // degrees (1, 2, 1), max 2: q_v = max(0, d_v - 2 + s)
  const PerturbationSpec s = parse_spec(R"({"mode":"p2","global_budget":3,"local_rule":{"strength":1}})", path());
  CHECK(s.mode == PerturbationMode::DirectedRemoveOnly);
  CHECK(s.local_budgets == std::vector<int>{0, 1, 0});
  const PerturbationSpec t =
      parse_spec(R"({"mode":"p1","global_budget":1,"local_rule":{"strength":2},"tight_root_budget":true})", path());
  CHECK(t.local_budgets == std::vector<int>{1, 2, 1});
  CHECK(t.tight_root_budget);
}

TEST_CASE("graph-level target and dense head") {
  const GraphInstance g = parse_graph(
      R"({"n":2,"directed":true,"features":[[1,0],[0,1]],"edges":[[0,1]],"target":"graph","label_true":0,"label_attack":1})");
  CHECK(g.target.is_graph());
  CHECK(g.adjacency(0, 1));
  CHECK(!g.adjacency(1, 0));
  const MPNNModel m = parse_model(
      R"({"layers":[{"w_self":[[1],[0]],"w_neigh":[[0],[1]],"bias":[0],"activation":"relu"}],"pooling":"add",)"
      R"("dense":[{"w_self":[[1,-1]],"bias":[0.5,0],"activation":"identity"}]})");
  CHECK(m.pooling == Pooling::Add);
  REQUIRE(m.dense_head.size() == 1);
  CHECK(m.dense_head[0].w_neigh.isZero());
  CHECK(m.dense_head[0].bias(0) == 0.5);
}

TEST_CASE("malformed input is a parse error") {
  const char* models[] = {
      "not json",
      "[]",
      R"({"layers":[]})",
      R"({"layers":[{"w_self":[[1]],"bias":[0],"activation":"tanh"}]})",
      R"({"layers":[{"w_self":[[1]],"bias":["0"],"activation":"relu"}]})",
      R"({"layers":[{"w_self":[[1],[1,2]],"bias":[0],"activation":"relu"}]})",
      R"({"layers":[{"w_self":[[1]],"bias":[0],"activation":"relu"}],"pooling":"mean"})",
  };
  for (const char* text : models) {
    INFO(text);
    const ErrorCode c = code_of([&] { parse_model(text); });
    CHECK((c == ErrorCode::ParseError || c == ErrorCode::InvalidModel || c == ErrorCode::DimensionMismatch));
  }
  const char* graphs[] = {
      R"({"n":2,"features":[[1],[2]],"edges":[[0,1]],"target":{"node":0},"label_true":0})",
      R"({"n":2,"features":[[1],[2]],"edges":[[0]],"target":{"node":0},"label_true":0,"label_attack":1})",
      R"({"n":2,"features":[[1],[2]],"edges":[],"target":"all","label_true":0,"label_attack":1})",
      R"({"n":1.5,"features":[[1]],"edges":[],"target":"graph","label_true":0,"label_attack":1})",
  };
  for (const char* text : graphs) {
    INFO(text);
    CHECK(code_of([&] { parse_graph(text); }) == ErrorCode::ParseError);
  }
  CHECK(code_of([] { parse_spec(R"({"mode":"p3","global_budget":1,"local_budgets":[1,1,1]})", path()); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { parse_spec(R"({"mode":"p1","global_budget":1})", path()); }) == ErrorCode::ParseError);
  CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::IoError);
}

TEST_CASE("model, graph and spec round-trip") {
  oracle::Generator gen(3);
  for (int i = 0; i < 100; ++i) {
    const auto c = gen.next();
    const MPNNModel m = parse_model(model_to_json(c.model));
    REQUIRE(model_to_json(m) == model_to_json(c.model));
    const GraphInstance g = parse_graph(graph_to_json(c.graph));
    REQUIRE(g.adjacency == c.graph.adjacency);
    REQUIRE(g.features == c.graph.features);
    REQUIRE(g.directed == c.graph.directed);
    REQUIRE(g.label_true == c.graph.label_true);
    const PerturbationSpec s = parse_spec(spec_to_json(c.spec), g);
    REQUIRE(s.local_budgets == c.spec.local_budgets);
    REQUIRE(s.global_budget == c.spec.global_budget);
    REQUIRE(s.mode == c.spec.mode);
    REQUIRE(oracle::margin(m, g, g.adjacency) == oracle::margin(c.model, c.graph, c.graph.adjacency));
  }
}

TEST_CASE("verdict report") {
  const MPNNModel m = fixtures::shift_model();
  const GraphInstance g = fixtures::path_graph();
  SearchConfig cfg;
  cfg.attack_restarts = 0;
  const PerturbationSpec spec = fixtures::p1(1, {1, 1, 1});
  const Verdict v = verify(m, g, spec, cfg);
  const std::string text = verdict_to_json(v, g, spec, {true, R"({"seed":0})"});
  const json j = json::parse(text);
  CHECK(j["status"] == "nonrobust");
  CHECK(j["witness_edges"] == json::parse("[[0,2]]"));
  CHECK(j["witness_margin"].get<double>() == doctest::Approx(-0.5));
  CHECK(j["certified_bound"].is_null());
  CHECK(j["time_seconds"] == 0.0);
  CHECK(j["nodes_explored"] == 3);
  CHECK(j["strategy"] == "abt");
  CHECK(j["config"]["seed"] == 0);
  CHECK(text.back() == '\n');
  CHECK(verdict_to_json(verify(m, g, spec, cfg), g, spec, {true, R"({"seed":0})"}) == text);

  // remove-only witnesses list ordered entries
  GraphInstance d = g;
  d.directed = true;
  d.features = fixtures::mat({{0}, {-2}, {3}});
  d.adjacency = Adjacency::from_edges(3, {{1, 0}, {2, 1}}, true);
  const PerturbationSpec p2 = fixtures::p2(1, {1, 1, 1});
  const Verdict w = verify(m, d, p2, cfg);
  REQUIRE(w.status == VerdictStatus::NonRobust);
  CHECK(json::parse(verdict_to_json(w, d, p2))["witness_edges"] == json::parse("[[1,0]]"));
}

TEST_CASE("bounds report") {
  const MPNNModel m = fixtures::sum_model();
  const GraphInstance g = fixtures::path_graph(1, 0);
  const BoundsTable t = propagate(m, g, fixtures::p1(1, {1, 1, 1}), Strategy::Sbt);
  const json j = json::parse(bounds_to_json(t));
  CHECK(j["strategy"] == "sbt");
  REQUIRE(j["records"].size() == 6);
  const json& first = j["records"][0];
  CHECK(first["layer"] == 1);
  CHECK(first["node"] == 0);
  CHECK(first["feature"] == 0);
  CHECK(first["pre"] == json::parse("[-1,2]"));
  CHECK(j["dense"].empty());
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "gnncert_io_test";
  std::filesystem::create_directories(dir);
  const std::string p = (dir / "x.txt").string();
  write_file(p, "abc\n");
  CHECK(read_file(p) == "abc\n");
  CHECK(code_of([&] { write_file((dir / "missing" / "y").string(), "x"); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}
