#include "gnncert/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <thread>

#include "gnncert/error.hpp"
#include "gnncert/io.hpp"
#include "json.hpp"

namespace gnncert {

using nlohmann::json;

double sgm(const std::vector<double>& times, double shift) {
  if (times.empty()) throw Error(ErrorCode::EmptyInput, "shifted geometric mean of an empty list");
  if (!(shift > 0.0)) throw Error(ErrorCode::InvalidSpec, "shift must be positive");
  double log_sum = 0.0;
  for (double t : times) {
    if (t < 0.0) throw Error(ErrorCode::InvalidSpec, "times must be nonnegative");
    log_sum += std::log(t + shift);
  }
  return std::exp(log_sum / static_cast<double>(times.size())) - shift;
}

int global_budget_from_fraction(double delta_percent, int edges) {
  if (delta_percent < 0.0 || edges < 0) throw Error(ErrorCode::InvalidSpec, "negative budget fraction");
  const double raw = delta_percent / 100.0 * edges;
  // 0.07 * 100 style products land a hair above the integer
  return static_cast<int>(std::ceil(raw - 1e-9));
}

BenchManifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const json& p) {
    if (!p.is_string()) throw Error(ErrorCode::ParseError, "manifest paths must be strings");
    std::filesystem::path f = p.get<std::string>();
    return (f.is_absolute() ? f : dir / f).string();
  };
  BenchManifest m;
  if (!j.is_object() || !j.contains("instances") || !j["instances"].is_array())
    throw Error(ErrorCode::ParseError, "manifest needs an \"instances\" list");
  for (const auto& e : j["instances"]) {
    if (!e.is_object() || !e.contains("model") || !e.contains("graph") || !e.contains("spec"))
      throw Error(ErrorCode::ParseError, "manifest entries need model, graph and spec");
    BenchEntry entry{e.value("id", std::to_string(m.entries.size())), resolve(e["model"]), resolve(e["graph"]),
                     resolve(e["spec"])};
    m.entries.push_back(std::move(entry));
  }
  if (j.contains("deltas")) {
    for (const auto& d : j["deltas"]) {
      if (!d.is_number()) throw Error(ErrorCode::ParseError, "deltas must be numbers");
      m.deltas.push_back(d.get<double>());
    }
  }
  return m;
}

BenchSummary summarize(const std::vector<BenchRecord>& records) {
  BenchSummary s;
  s.count = static_cast<int>(records.size());
  std::vector<double> times, robust_times;
  std::vector<long long> robust_nodes;
  for (const auto& r : records) {
    if (r.status == "error") {
      ++s.error_count;
      continue;
    }
    times.push_back(r.time_seconds);
    if (r.status == "robust" || r.status == "nonrobust") ++s.solved_count;
    if (r.status == "robust") {
      robust_times.push_back(r.time_seconds);
      robust_nodes.push_back(r.nodes_explored);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
  };
  if (!times.empty()) {
    s.avg_time = mean(times);
    s.sgm_time = sgm(times);
  }
  s.robust_count = static_cast<int>(robust_times.size());
  if (!robust_times.empty()) {
    s.robust_avg_time = mean(robust_times);
    s.robust_sgm_time = sgm(robust_times);
    std::sort(robust_nodes.begin(), robust_nodes.end());
    const std::size_t k = robust_nodes.size();
    s.robust_median_nodes = k % 2 ? static_cast<double>(robust_nodes[k / 2])
                                  : 0.5 * static_cast<double>(robust_nodes[k / 2 - 1] + robust_nodes[k / 2]);
  }
  return s;
}

std::string record_to_json(const BenchRecord& r) {
  json j{{"instance_id", r.instance_id},
         {"delta", r.delta ? json(*r.delta) : json(nullptr)},
         {"status", r.status},
         {"time_seconds", r.time_seconds},
         {"nodes_explored", r.nodes_explored},
         {"strategy", r.strategy}};
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

std::string summary_to_json(const BenchSummary& s) {
  return json{{"count", s.count},
              {"avg_time", s.avg_time},
              {"sgm_time", s.sgm_time},
              {"solved_count", s.solved_count},
              {"error_count", s.error_count},
              {"robust", {{"count", s.robust_count},
                          {"avg_time", s.robust_avg_time},
                          {"sgm_time", s.robust_sgm_time},
                          {"median_nodes", s.robust_median_nodes}}}}
      .dump();
}

namespace {

struct Job {
  const BenchEntry* entry;
  std::optional<double> delta;
};

BenchRecord run_job(const Job& job, const BenchConfig& config) {
  BenchRecord r;
  r.instance_id = job.entry->id;
  r.delta = job.delta;
  r.strategy = to_string(config.search.strategy);
  try {
    const MPNNModel model = load_model(job.entry->model);
    const GraphInstance graph = load_graph(job.entry->graph);
    PerturbationSpec spec = load_spec(job.entry->spec, graph);
    if (job.delta) {
      const int edges = graph.directed ? graph.adjacency.entry_count()
                                       : static_cast<int>(graph.adjacency.undirected_edges().size());
      spec.global_budget = global_budget_from_fraction(*job.delta, edges);
    }
    const Verdict v = verify(model, graph, spec, config.search);
    r.status = to_string(v.status);
    r.time_seconds = config.deterministic ? 0.0 : v.stats.time_seconds;
    r.nodes_explored = v.stats.nodes_explored;
  } catch (const std::exception& e) {
    r.status = "error";
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchManifest& manifest, const BenchConfig& config, std::ostream& jsonl) {
  std::vector<Job> jobs;
  for (const auto& e : manifest.entries) {
    if (manifest.deltas.empty()) {
      jobs.push_back({&e, std::nullopt});
    } else {
      for (double d : manifest.deltas) jobs.push_back({&e, d});
    }
  }

  std::vector<BenchRecord> records(jobs.size());
  std::mutex out_mutex;
  auto emit = [&](std::size_t i, BenchRecord r) {
    std::lock_guard lock(out_mutex);
    jsonl << record_to_json(r) << '\n' << std::flush;
    records[i] = std::move(r);
  };

  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) emit(i, run_job(jobs[i], config));
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) emit(i, run_job(jobs[i], config));
    });
  }
  for (auto& t : pool) t.join();
  return records;
}

}  // namespace gnncert
