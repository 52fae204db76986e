#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gnncert/bnb.hpp"

namespace gnncert {

/// Shifted geometric mean (prod (t_i + s))^(1/n) - s, evaluated in log space.
/// Throws EmptyInput for an empty list and InvalidSpec for negative times or
/// a nonpositive shift.
double sgm(const std::vector<double>& times, double shift = 10.0);

/// Q = ceil(delta / 100 * edges).
int global_budget_from_fraction(double delta_percent, int edges);

struct BenchEntry {
  std::string id;
  std::string model;
  std::string graph;
  std::string spec;
};

/// {"instances":[{"id","model","graph","spec"}], "deltas":[...]}. Paths are
/// relative to the manifest. Without "deltas" each spec's own global budget
/// is used once.
struct BenchManifest {
  std::vector<BenchEntry> entries;
  std::vector<double> deltas;
};

BenchManifest load_manifest(const std::string& path);

struct BenchRecord {
  std::string instance_id;
  std::optional<double> delta;
  std::string status;  // robust | nonrobust | timeout | error
  double time_seconds = 0.0;
  long long nodes_explored = 0;
  std::string strategy;
  std::string error;
};

struct BenchSummary {
  int count = 0;
  double avg_time = 0.0;
  double sgm_time = 0.0;
  int solved_count = 0;
  int error_count = 0;
  int robust_count = 0;
  double robust_avg_time = 0.0;
  double robust_sgm_time = 0.0;
  double robust_median_nodes = 0.0;
};

/// Times aggregate over every record that is not an error.
BenchSummary summarize(const std::vector<BenchRecord>& records);

std::string record_to_json(const BenchRecord& record);
std::string summary_to_json(const BenchSummary& summary);

struct BenchConfig {
  SearchConfig search;
  int workers = 1;
  bool deterministic = false;
};

/// Runs every (entry, delta) job, streaming one JSON line per finished job to
/// `jsonl` and flushing after each. Per-job failures become error records.
/// With one worker records appear in manifest order.
std::vector<BenchRecord> run_bench(const BenchManifest& manifest, const BenchConfig& config, std::ostream& jsonl);

}  // namespace gnncert
