#include "gnncert/perturbation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gnncert/error.hpp"

namespace gnncert {

void PerturbationSpec::validate(const GraphInstance& instance) const {
  const int n = instance.num_nodes();
  if (static_cast<int>(local_budgets.size()) != n) {
    throw Error(ErrorCode::InvalidSpec, "expected " + std::to_string(n) + " local budgets, got " +
                                            std::to_string(local_budgets.size()));
  }
  if (global_budget < 0) throw Error(ErrorCode::InvalidSpec, "negative global budget");
  if (std::any_of(local_budgets.begin(), local_budgets.end(), [](int q) { return q < 0; })) {
    throw Error(ErrorCode::InvalidSpec, "negative local budget");
  }
  if (mode == PerturbationMode::UndirectedFlip && (instance.directed || !instance.adjacency.is_symmetric())) {
    throw Error(ErrorCode::ModeMismatch, "P1 perturbations need an undirected graph");
  }
}

// ---------------------------------------------------------------------------
// Fixings

std::optional<bool> Fixings::value(int u, int v) const {
  const auto s = state_[index(u, v)];
  if (s < 0) return std::nullopt;
  return s == 1;
}

void Fixings::fix(int u, int v, bool value) {
  if (u == v) throw Error(ErrorCode::InconsistentFixings, "cannot fix a diagonal entry");
  state_[index(u, v)] = value ? 1 : 0;
}

void Fixings::fix_pair(int u, int v, bool value, bool symmetric) {
  fix(u, v, value);
  if (symmetric) fix(v, u, value);
}

int Fixings::count() const {
  return static_cast<int>(std::count_if(state_.begin(), state_.end(), [](signed char s) { return s >= 0; }));
}

std::vector<std::pair<int, int>> Fixings::fixed_zero() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n_; ++u)
    for (int v = 0; v < n_; ++v)
      if (state_[index(u, v)] == 0) out.emplace_back(u, v);
  return out;
}

std::vector<std::pair<int, int>> Fixings::fixed_one() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n_; ++u)
    for (int v = 0; v < n_; ++v)
      if (state_[index(u, v)] == 1) out.emplace_back(u, v);
  return out;
}

// ---------------------------------------------------------------------------
// Budgets

int BudgetState::total_removed() const { return std::accumulate(removed_per_node.begin(), removed_per_node.end(), 0); }
int BudgetState::total_added() const { return std::accumulate(added_per_node.begin(), added_per_node.end(), 0); }

BudgetState empty_budget_state(int n) { return {std::vector<int>(n, 0), std::vector<int>(n, 0)}; }

BudgetState budget_state(const Adjacency& base, const Fixings& fixings) {
  const int n = base.size();
  if (fixings.size() != n) throw Error(ErrorCode::DimensionMismatch, "fixings and base graph sizes differ");
  BudgetState state = empty_budget_state(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const auto fixed = fixings.value(u, v);
      if (!fixed) continue;
      if (base(u, v) && !*fixed) ++state.removed_per_node[v];
      if (!base(u, v) && *fixed) ++state.added_per_node[v];
    }
  }
  return state;
}

namespace {

int raw_remaining(const PerturbationSpec& spec, const BudgetState& state, int v) {
  const int spent_global = state.total_removed() + state.total_added();
  const int local = spec.local_budgets[v] - state.removed_per_node[v] - state.added_per_node[v];
  if (spec.mode == PerturbationMode::DirectedRemoveOnly) {
    return std::min(spec.local_budgets[v] - state.removed_per_node[v], spec.global_budget - state.total_removed());
  }
  int global = 2 * spec.global_budget - spent_global;
  // Each flip touching column v spends two entries of the 2Q allowance.
  if (spec.tight_root_budget) global = global >= 0 ? global / 2 : -1;
  return std::min(local, global);
}

}  // namespace

int remaining_local_budget(const PerturbationSpec& spec, const BudgetState& state, int v) {
  return std::max(0, raw_remaining(spec, state, v));
}

void check_fixings(const Adjacency& base, const PerturbationSpec& spec, const Fixings& fixings) {
  const int n = base.size();
  if (fixings.size() != n) throw Error(ErrorCode::InconsistentFixings, "fixings size differs from graph size");
  const bool undirected = spec.mode == PerturbationMode::UndirectedFlip;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const auto fixed = fixings.value(u, v);
      if (undirected && fixed != fixings.value(v, u)) {
        throw Error(ErrorCode::InconsistentFixings, "P1 fixings must be symmetric");
      }
      if (!undirected && fixed && *fixed && !base(u, v)) {
        throw Error(ErrorCode::InconsistentFixings, "P2 cannot fix a new edge to 1");
      }
    }
  }
  const BudgetState state = budget_state(base, fixings);
  for (int v = 0; v < n; ++v) {
    if (spec.local_budgets[v] - state.removed_per_node[v] - state.added_per_node[v] < 0) {
      throw Error(ErrorCode::InconsistentFixings, "local budget exceeded at node " + std::to_string(v));
    }
  }
  const int spent = state.total_removed() + state.total_added();
  const int allowance = undirected ? 2 * spec.global_budget : spec.global_budget;
  if (spent > allowance) throw Error(ErrorCode::InconsistentFixings, "global budget exceeded");
}

bool is_admissible(const Adjacency& adjacency, const Adjacency& base, const PerturbationSpec& spec) {
  const int n = base.size();
  if (adjacency.size() != n) throw Error(ErrorCode::DimensionMismatch, "adjacency sizes differ");
  if (static_cast<int>(spec.local_budgets.size()) != n) throw Error(ErrorCode::DimensionMismatch, "local budget length");
  const bool undirected = spec.mode == PerturbationMode::UndirectedFlip;
  if (undirected && !adjacency.is_symmetric()) return false;
  int changed = 0;
  for (int v = 0; v < n; ++v) {
    int column = 0;
    for (int u = 0; u < n; ++u) {
      if (adjacency(u, v) == base(u, v)) continue;
      if (!undirected && adjacency(u, v)) return false;  // P2 never adds
      ++column;
    }
    if (column > spec.local_budgets[v]) return false;
    changed += column;
  }
  return changed <= (undirected ? 2 * spec.global_budget : spec.global_budget);
}

std::vector<int> local_budget_from_degree(const std::vector<int>& degrees, int strength) {
  if (degrees.empty()) return {};
  const int max_degree = *std::max_element(degrees.begin(), degrees.end());
  std::vector<int> out;
  out.reserve(degrees.size());
  for (int d : degrees) out.push_back(std::max(0, d - max_degree + strength));
  return out;
}

std::vector<int> node_degrees(const Adjacency& adjacency) {
  std::vector<int> out(adjacency.size());
  for (int v = 0; v < adjacency.size(); ++v) out[v] = adjacency.in_degree(v);
  return out;
}

// ---------------------------------------------------------------------------
// k-hop extraction

KHopResult extract_khop(const GraphInstance& graph, PerturbationMode mode, int t, int k) {
  if (mode != PerturbationMode::DirectedRemoveOnly) {
    throw Error(ErrorCode::ModeMismatch, "k-hop extraction is only exact for remove-only perturbations");
  }
  const int n = graph.num_nodes();
  if (t < 0 || t >= n) throw Error(ErrorCode::InvalidGraph, "target node out of range");
  if (k < 0) throw Error(ErrorCode::InvalidGraph, "negative hop count");

  std::vector<char> keep(n, 0);
  keep[t] = 1;
  std::vector<int> frontier{t};
  for (int hop = 0; hop < k && !frontier.empty(); ++hop) {
    std::vector<int> next;
    for (int w : frontier) {
      for (int u = 0; u < n; ++u) {
        if (graph.adjacency(u, w) && !keep[u]) {
          keep[u] = 1;
          next.push_back(u);
        }
      }
    }
    frontier = std::move(next);
  }

  KHopResult result;
  std::vector<int> new_id(n, -1);
  for (int v = 0; v < n; ++v) {
    if (!keep[v]) continue;
    new_id[v] = static_cast<int>(result.original_ids.size());
    result.original_ids.push_back(v);
  }
  const int m = static_cast<int>(result.original_ids.size());
  GraphInstance& sub = result.graph;
  sub.features.resize(m, graph.features.cols());
  sub.adjacency = Adjacency(m);
  for (int i = 0; i < m; ++i) {
    sub.features.row(i) = graph.features.row(result.original_ids[i]);
    for (int j = 0; j < m; ++j) {
      if (graph.adjacency(result.original_ids[i], result.original_ids[j])) sub.adjacency.set(i, j, true);
    }
  }
  sub.directed = graph.directed;
  sub.target = Target::of_node(new_id[t]);
  sub.label_true = graph.label_true;
  sub.label_attack = graph.label_attack;
  return result;
}

PerturbationSpec restrict_spec(const PerturbationSpec& spec, const std::vector<int>& original_ids) {
  PerturbationSpec out = spec;
  out.local_budgets.clear();
  for (int id : original_ids) out.local_budgets.push_back(spec.local_budgets.at(id));
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration

AdmissibleEnumerator::AdmissibleEnumerator(Adjacency base, PerturbationSpec spec, long long cap)
    : base_(std::move(base)), spec_(std::move(spec)), cap_(cap) {
  const int n = base_.size();
  if (static_cast<int>(spec_.local_budgets.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "local budget length differs from node count");
  }
  if (spec_.mode == PerturbationMode::UndirectedFlip) {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) units_.emplace_back(u, v);
  } else {
    units_ = base_.edges();
  }
  max_flips_ = std::min<int>(spec_.global_budget, static_cast<int>(units_.size()));
}

bool AdmissibleEnumerator::advance_combination() {
  const int m = static_cast<int>(units_.size());
  int i = k_ - 1;
  while (i >= 0 && combo_[i] == m - k_ + i) --i;
  if (i >= 0) {
    ++combo_[i];
    for (int j = i + 1; j < k_; ++j) combo_[j] = combo_[j - 1] + 1;
    return true;
  }
  if (++k_ > max_flips_) return false;
  combo_.resize(k_);
  std::iota(combo_.begin(), combo_.end(), 0);
  return true;
}

bool AdmissibleEnumerator::within_local_budgets() const {
  std::vector<int> used(base_.size(), 0);
  const bool undirected = spec_.mode == PerturbationMode::UndirectedFlip;
  for (int idx : combo_) {
    auto [u, v] = units_[idx];
    if (++used[v] > spec_.local_budgets[v]) return false;
    if (undirected && ++used[u] > spec_.local_budgets[u]) return false;
  }
  return true;
}

std::optional<Adjacency> AdmissibleEnumerator::next() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
  } else if (!advance_combination()) {
    done_ = true;
    return std::nullopt;
  }
  while (!within_local_budgets()) {
    if (!advance_combination()) {
      done_ = true;
      return std::nullopt;
    }
  }
  if (++produced_ > cap_) {
    throw Error(ErrorCode::CapExceeded, "more than " + std::to_string(cap_) + " admissible matrices");
  }
  Adjacency a = base_;
  for (int idx : combo_) {
    auto [u, v] = units_[idx];
    a.toggle(u, v);
    if (spec_.mode == PerturbationMode::UndirectedFlip) a.toggle(v, u);
  }
  return a;
}

std::vector<Adjacency> enumerate_admissible(const Adjacency& base, const PerturbationSpec& spec, long long cap) {
  AdmissibleEnumerator it(base, spec, cap);
  std::vector<Adjacency> out;
  while (auto a = it.next()) out.push_back(std::move(*a));
  return out;
}

}  // namespace gnncert
