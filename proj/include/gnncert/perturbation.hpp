#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gnncert/adjacency.hpp"
#include "gnncert/model.hpp"

namespace gnncert {

enum class PerturbationMode {
  UndirectedFlip,      // P1: symmetric add/remove, ||A - A*||_0 <= 2Q
  DirectedRemoveOnly,  // P2: A <= A*, ||A - A*||_0 <= Q
};

struct PerturbationSpec {
  PerturbationMode mode = PerturbationMode::UndirectedFlip;
  int global_budget = 0;           // Q
  std::vector<int> local_budgets;  // q_v, one per node
  /// Counts each undirected flip as one global unit when bounding a single
  /// column, i.e. caps the P1 remaining budget by Q instead of 2Q.
  bool tight_root_budget = false;

  /// Throws InvalidSpec when the spec does not fit `instance`.
  void validate(const GraphInstance& instance) const;
};

/// Edge variables fixed during branch-and-bound. Per-entry state: -1 free, 0, 1.
class Fixings {
 public:
  Fixings() = default;
  explicit Fixings(int n) : n_(n), state_(static_cast<std::size_t>(n) * n, -1) {}

  int size() const { return n_; }
  std::optional<bool> value(int u, int v) const;
  bool is_fixed(int u, int v) const { return state_[index(u, v)] >= 0; }
  void fix(int u, int v, bool value);
  /// Fixes (u, v) and, when `symmetric`, also (v, u).
  void fix_pair(int u, int v, bool value, bool symmetric);
  int count() const;

  std::vector<std::pair<int, int>> fixed_zero() const;
  std::vector<std::pair<int, int>> fixed_one() const;

  friend bool operator==(const Fixings&, const Fixings&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(u) * n_ + v; }

  int n_ = 0;
  std::vector<signed char> state_;
};

/// e_r(v) = removed original in-edges fixed so far, e_a(v) = added in-edges.
struct BudgetState {
  std::vector<int> removed_per_node;
  std::vector<int> added_per_node;

  int total_removed() const;
  int total_added() const;
};

BudgetState budget_state(const Adjacency& base, const Fixings& fixings);
BudgetState empty_budget_state(int n);

/// Throws InconsistentFixings when `fixings` cannot belong to any admissible A.
void check_fixings(const Adjacency& base, const PerturbationSpec& spec, const Fixings& fixings);

bool is_admissible(const Adjacency& adjacency, const Adjacency& base, const PerturbationSpec& spec);

/// q_v' = min{q_v - e_r(v) - e_a(v), 2Q - sum e_r - sum e_a} under P1,
/// min{q_v - e_r(v), Q - sum e_r} under P2; clamped at 0.
int remaining_local_budget(const PerturbationSpec& spec, const BudgetState& state, int v);

/// q_v = max{0, d_v - max_u d_u + s}.
std::vector<int> local_budget_from_degree(const std::vector<int>& degrees, int strength);
/// In-degree per node (equals the degree for undirected graphs).
std::vector<int> node_degrees(const Adjacency& adjacency);

struct KHopResult {
  GraphInstance graph;
  std::vector<int> original_ids;  // new id -> old id
};

/// Induced subgraph on nodes that reach `t` along at most `k` message edges.
/// Only valid under remove-only perturbations.
KHopResult extract_khop(const GraphInstance& graph, PerturbationMode mode, int t, int k);
/// Restricts per-node budgets to the nodes kept by extract_khop.
PerturbationSpec restrict_spec(const PerturbationSpec& spec, const std::vector<int>& original_ids);

/// Streams every admissible adjacency exactly once, A* first, ordered by
/// number of flips. Throws CapExceeded once more than `cap` would be produced.
class AdmissibleEnumerator {
 public:
  AdmissibleEnumerator(Adjacency base, PerturbationSpec spec, long long cap);

  std::optional<Adjacency> next();
  long long produced() const { return produced_; }

 private:
  bool advance_combination();
  bool within_local_budgets() const;

  Adjacency base_;
  PerturbationSpec spec_;
  long long cap_;
  long long produced_ = 0;
  std::vector<std::pair<int, int>> units_;  // flippable pair or entry
  int max_flips_ = 0;
  int k_ = 0;
  std::vector<int> combo_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<Adjacency> enumerate_admissible(const Adjacency& base, const PerturbationSpec& spec, long long cap);

}  // namespace gnncert
