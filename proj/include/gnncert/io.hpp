#pragma once

#include <string>

#include "gnncert/bnb.hpp"
#include "gnncert/bounds.hpp"
#include "gnncert/model.hpp"
#include "gnncert/perturbation.hpp"

namespace gnncert {

/// JSON text readers. All throw ParseError on malformed or mistyped input and
/// IoError when a file cannot be opened.
MPNNModel parse_model(const std::string& text);
GraphInstance parse_graph(const std::string& text);
/// `graph` is needed to resolve a "local_rule" into per-node budgets.
PerturbationSpec parse_spec(const std::string& text, const GraphInstance& graph);

MPNNModel load_model(const std::string& path);
GraphInstance load_graph(const std::string& path);
PerturbationSpec load_spec(const std::string& path, const GraphInstance& graph);

std::string model_to_json(const MPNNModel& model);
std::string graph_to_json(const GraphInstance& graph);
std::string spec_to_json(const PerturbationSpec& spec);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

struct ReportOptions {
  /// Report a solve time of zero so that repeated runs are byte-identical.
  bool deterministic = false;
  /// Extra key/value pairs embedded under "config" (already JSON-encoded).
  std::string config_json = "{}";
};

/// {"status", "certified_bound", "witness_edges", "nodes_explored",
///  "time_seconds", "strategy", "config"}; witness edges are unordered pairs
///  under P1 and ordered entries under P2 that differ from A*.
std::string verdict_to_json(const Verdict& verdict, const GraphInstance& graph, const PerturbationSpec& spec,
                            const ReportOptions& options = {});

/// Array of {"layer","node","feature","pre","post"} records plus the margin.
std::string bounds_to_json(const BoundsTable& bounds);

}  // namespace gnncert
