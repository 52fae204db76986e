// gnncert: exact robustness verification of message-passing networks
// against edge perturbations.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "gnncert/bench.hpp"
#include "gnncert/bnb.hpp"
#include "gnncert/error.hpp"
#include "gnncert/io.hpp"
#include "gnncert/mip.hpp"
#include "json.hpp"

using namespace gnncert;
using nlohmann::json;

namespace {

constexpr int kExitError = 3;

int env_threads() {
  const char* raw = std::getenv("GNNCERT_THREADS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (*end != '\0' || n < 1) throw Error(ErrorCode::InvalidSpec, "GNNCERT_THREADS must be a positive integer");
  return static_cast<int>(n);
}

struct Inputs {
  std::string model_path, graph_path, spec_path;
};

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--model", in.model_path, "model JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--graph", in.graph_path, "graph JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--spec", in.spec_path, "perturbation spec JSON")->required()->check(CLI::ExistingFile);
}

struct Loaded {
  MPNNModel model;
  GraphInstance graph;
  PerturbationSpec spec;
};

Loaded load(const Inputs& in) {
  Loaded l;
  l.model = load_model(in.model_path);
  l.graph = load_graph(in.graph_path);
  l.spec = load_spec(in.spec_path, l.graph);
  l.graph.validate(l.model);
  l.spec.validate(l.graph);
  return l;
}

const std::map<std::string, Strategy> kStrategies{
    {"basic", Strategy::Basic}, {"sbt", Strategy::Sbt}, {"abt", Strategy::Abt}};
const std::map<std::string, Branching> kBranching{
    {"max-impact", Branching::MaxImpact}, {"input-order", Branching::InputOrder}};
const std::map<std::string, NodeSelection> kSelection{
    {"best-bound", NodeSelection::BestBound}, {"depth-first", NodeSelection::DepthFirst}};

template <class T>
std::string name_of(const std::map<std::string, T>& table, T value) {
  for (const auto& [k, v] : table)
    if (v == value) return k;
  return "?";
}

void add_search_options(CLI::App* cmd, SearchConfig& cfg) {
  cmd->add_option("--strategy", cfg.strategy, "bound strategy")
      ->transform(CLI::CheckedTransformer(kStrategies, CLI::ignore_case))
      ->option_text("basic|sbt|abt (abt)");
  cmd->add_option("--time-limit", cfg.time_limit, "seconds");
  cmd->add_option("--node-limit", cfg.node_limit, "maximum evaluated nodes");
  cmd->add_option("--seed", cfg.seed, "attack seed");
  cmd->add_option("--attack-restarts", cfg.attack_restarts, "greedy attack restarts before the search");
  cmd->add_option("--branching", cfg.branching)
      ->transform(CLI::CheckedTransformer(kBranching, CLI::ignore_case))
      ->option_text("max-impact|input-order");
  cmd->add_option("--node-selection", cfg.node_selection)
      ->transform(CLI::CheckedTransformer(kSelection, CLI::ignore_case))
      ->option_text("best-bound|depth-first");
}

json config_json(const SearchConfig& cfg) {
  return {{"strategy", to_string(cfg.strategy)},
          {"time_limit", cfg.time_limit},
          {"node_limit", cfg.node_limit},
          {"seed", cfg.seed},
          {"attack_restarts", cfg.attack_restarts},
          {"branching", name_of(kBranching, cfg.branching)},
          {"node_selection", name_of(kSelection, cfg.node_selection)},
          {"threads", cfg.threads}};
}

int exit_code(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Robust: return 0;
    case VerdictStatus::NonRobust: return 1;
    case VerdictStatus::Timeout: return 2;
  }
  return kExitError;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

// Runs the search on the k-hop neighbourhood of the target and maps a witness
// back onto the full graph.
Verdict verify_khop(const Loaded& l, int k, const SearchConfig& cfg) {
  if (l.graph.target.is_graph()) throw Error(ErrorCode::InvalidSpec, "--khop needs a node target");
  const KHopResult sub = extract_khop(l.graph, l.spec.mode, *l.graph.target.node, k);
  const PerturbationSpec sub_spec = restrict_spec(l.spec, sub.original_ids);
  Verdict v = verify(l.model, sub.graph, sub_spec, cfg);
  if (v.witness) {
    Adjacency full = l.graph.adjacency;
    const auto& ids = sub.original_ids;
    for (int u = 0; u < sub.graph.num_nodes(); ++u)
      for (int w = 0; w < sub.graph.num_nodes(); ++w)
        if (u != w) full.set(ids[u], ids[w], (*v.witness)(u, w));
    v.witness = full;
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact robustness verification of message-passing networks under edge perturbations"};
  app.require_subcommand(1);

  Inputs in;
  SearchConfig cfg;
  std::string out_path;
  bool deterministic = false;

  auto* verify_cmd = app.add_subcommand("verify", "decide robustness by branch-and-bound");
  add_inputs(verify_cmd, in);
  add_search_options(verify_cmd, cfg);
  int khop = 0;
  verify_cmd->add_option("--khop", khop, "restrict to the k-hop neighbourhood of the target (remove-only mode)");
  verify_cmd->add_option("--report", out_path, "report JSON path (stdout when omitted)");
  verify_cmd->add_flag("--deterministic", deterministic, "report a solve time of zero");

  Strategy bounds_strategy = Strategy::Sbt;
  auto* bounds_cmd = app.add_subcommand("bounds", "print interval bounds of every neuron");
  add_inputs(bounds_cmd, in);
  bounds_cmd->add_option("--strategy", bounds_strategy)
      ->transform(CLI::CheckedTransformer(kStrategies, CLI::ignore_case))
      ->option_text("basic|sbt|abt (sbt)");
  bounds_cmd->add_option("--out", out_path);

  Strategy mip_strategy = Strategy::Sbt;
  bool merge_pairs = false;
  auto* mip_cmd = app.add_subcommand("export-mip", "write the big-M MIP in LP format");
  add_inputs(mip_cmd, in);
  mip_cmd->add_option("--strategy", mip_strategy)
      ->transform(CLI::CheckedTransformer(std::map<std::string, Strategy>{{"basic", Strategy::Basic},
                                                                          {"sbt", Strategy::Sbt}},
                                          CLI::ignore_case))
      ->option_text("basic|sbt (sbt)");
  mip_cmd->add_option("--out", out_path, "LP file")->required();
  mip_cmd->add_flag("--merge-pairs", merge_pairs, "one variable per undirected pair");

  int restarts = 8;
  auto* attack_cmd = app.add_subcommand("attack", "greedy search for a misclassifying perturbation");
  add_inputs(attack_cmd, in);
  attack_cmd->add_option("--restarts", restarts);
  attack_cmd->add_option("--seed", cfg.seed);
  attack_cmd->add_option("--out", out_path);

  long long cap = 1'000'000;
  auto* oracle_cmd = app.add_subcommand("oracle", "minimum margin by exhaustive enumeration");
  add_inputs(oracle_cmd, in);
  oracle_cmd->add_option("--cap", cap, "maximum number of enumerated graphs");
  oracle_cmd->add_option("--out", out_path);

  std::string manifest_path, summary_path;
  auto* bench_cmd = app.add_subcommand("bench", "verify every instance of a manifest");
  bench_cmd->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  add_search_options(bench_cmd, cfg);
  bench_cmd->add_option("--out", out_path, "JSONL records (stdout when omitted)");
  bench_cmd->add_option("--summary", summary_path, "summary JSON (stderr when omitted)");
  bench_cmd->add_flag("--deterministic", deterministic, "record solve times of zero");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : std::max(rc, kExitError);
  }

  try {
    if (*verify_cmd) {
      cfg.threads = env_threads();
      const Loaded l = load(in);
      const Verdict v = khop > 0 ? verify_khop(l, khop, cfg) : verify(l.model, l.graph, l.spec, cfg);
      json config = config_json(cfg);
      config["model"] = in.model_path;
      config["graph"] = in.graph_path;
      config["spec"] = in.spec_path;
      config["khop"] = khop;
      ReportOptions opts{deterministic, config.dump()};
      emit(verdict_to_json(v, l.graph, l.spec, opts), out_path);
      if (!out_path.empty()) std::cout << to_string(v.status) << '\n';
      return exit_code(v.status);
    }
    if (*bounds_cmd) {
      const Loaded l = load(in);
      emit(bounds_to_json(propagate(l.model, l.graph, l.spec, bounds_strategy)), out_path);
      return 0;
    }
    if (*mip_cmd) {
      const Loaded l = load(in);
      const BoundsTable bounds = propagate(l.model, l.graph, l.spec, mip_strategy);
      const MIPModel mip = encode(l.model, l.graph, l.spec, bounds, {merge_pairs});
      write_lp(mip, out_path);
      std::cout << mip.variables().size() << " variables, " << mip.constraints().size() << " constraints\n";
      return 0;
    }
    if (*attack_cmd) {
      const Loaded l = load(in);
      Verdict v;
      v.witness = attack_search(l.model, l.graph, l.spec, restarts, cfg.seed);
      json report{{"found", v.witness.has_value()}, {"witness_edges", json::array()}, {"margin", nullptr}};
      if (v.witness) {
        v.status = VerdictStatus::NonRobust;
        v.witness_margin = margin(l.model, l.graph, *v.witness);
        report = json::parse(verdict_to_json(v, l.graph, l.spec));
        report["found"] = true;
        report["margin"] = *v.witness_margin;
      }
      emit(report.dump(2) + "\n", out_path);
      return v.witness ? 1 : 0;
    }
    if (*oracle_cmd) {
      const Loaded l = load(in);
      const BruteForceResult r = brute_force_verdict(l.model, l.graph, l.spec, cap);
      Verdict v;
      v.status = r.min_margin >= 0.0 ? VerdictStatus::Robust : VerdictStatus::NonRobust;
      v.witness = r.argmin;
      json report = json::parse(verdict_to_json(v, l.graph, l.spec));
      json out{{"status", report["status"]},
               {"min_margin", r.min_margin},
               {"argmin_edges", report["witness_edges"]},
               {"enumerated", r.enumerated}};
      emit(out.dump(2) + "\n", out_path);
      return exit_code(v.status);
    }
    if (*bench_cmd) {
      BenchConfig bc{cfg, env_threads(), deterministic};
      const BenchManifest manifest = load_manifest(manifest_path);
      std::vector<BenchRecord> records;
      if (out_path.empty()) {
        records = run_bench(manifest, bc, std::cout);
      } else {
        std::ofstream jsonl(out_path);
        if (!jsonl) throw Error(ErrorCode::IoError, "cannot write " + out_path);
        records = run_bench(manifest, bc, jsonl);
      }
      const std::string summary = summary_to_json(summarize(records)) + "\n";
      if (summary_path.empty()) {
        std::cerr << summary;
      } else {
        write_file(summary_path, summary);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
