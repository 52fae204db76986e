#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gnncert/bounds.hpp"
#include "gnncert/model.hpp"
#include "gnncert/perturbation.hpp"

namespace gnncert {

enum class Branching { MaxImpact, InputOrder };
enum class NodeSelection { BestBound, DepthFirst };

struct SearchConfig {
  Strategy strategy = Strategy::Abt;
  double time_limit = 7200.0;  // seconds
  long long node_limit = 10'000'000;
  Branching branching = Branching::MaxImpact;
  NodeSelection node_selection = NodeSelection::BestBound;
  std::uint64_t seed = 0;
  int attack_restarts = 4;
  /// Children of a branched node are bounded concurrently when > 1. Never
  /// changes the verdict or the node count.
  int threads = 1;

  void validate() const;
};

enum class VerdictStatus { Robust, NonRobust, Timeout };

const char* to_string(VerdictStatus s);

struct VerdictStats {
  long long nodes_explored = 0;
  double time_seconds = 0.0;
  Strategy strategy = Strategy::Abt;
  int max_depth = 0;
};

struct Verdict {
  VerdictStatus status = VerdictStatus::Timeout;
  std::optional<Adjacency> witness;      // NonRobust: admissible A with margin < 0
  std::optional<double> certified_bound; // Robust: proven lower bound >= 0 on the margin
  std::optional<double> witness_margin;
  VerdictStats stats;
};

/// One decision unit: an unordered pair under P1, an original edge under P2.
using EdgeUnit = std::pair<int, int>;

struct BBNode {
  Fixings fixings;
  int depth = 0;
  double dual_bound = 0.0;
  BudgetState budget_state;
  long long id = 0;
};

/// Static data shared by every node of one search.
class SearchProblem {
 public:
  SearchProblem(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec);

  const MPNNModel& model() const { return model_; }
  const GraphInstance& instance() const { return instance_; }
  const PerturbationSpec& spec() const { return spec_; }
  bool undirected() const { return spec_.mode == PerturbationMode::UndirectedFlip; }

  /// Units whose value can influence the objective.
  const std::vector<EdgeUnit>& relevant_units() const { return units_; }
  /// Columns whose aggregation can influence the objective.
  const std::vector<char>& relevant_columns() const { return relevant_columns_; }
  /// |delta_lb| + |delta_ub| summed over first-layer output features and the
  /// relevant columns the unit touches.
  double impact(const EdgeUnit& unit) const;

  bool is_fixed(const Fixings& fixings, const EdgeUnit& unit) const;
  void fix(Fixings& fixings, const EdgeUnit& unit, bool value) const;
  /// Whether toggling `unit` away from A* still fits the remaining budgets.
  bool flip_allowed(const BudgetState& state, const EdgeUnit& unit) const;
  /// Fixes every unfixed relevant unit that can no longer flip to its A* value.
  void propagate_domains(Fixings& fixings) const;
  std::vector<EdgeUnit> free_units(const Fixings& fixings) const;
  /// A* with the fixed entries substituted.
  Adjacency completion(const Fixings& fixings) const;

 private:
  const MPNNModel& model_;
  const GraphInstance& instance_;
  const PerturbationSpec& spec_;
  std::vector<EdgeUnit> units_;
  std::vector<char> relevant_columns_;
  std::vector<ContributionCache> layer1_;  // one per first-layer output feature
};

/// Sound lower bound on the margin over all admissible A consistent with
/// `fixings`. Throws InconsistentFixings.
double node_bound(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                  const Fixings& fixings, Strategy strategy);

struct BranchResult {
  EdgeUnit unit;
  BBNode zero_child;  // unit fixed to 0
  BBNode one_child;   // unit fixed to 1
};

/// Throws NoBranchCandidate when every relevant unit is fixed.
BranchResult branch(const SearchProblem& problem, const BBNode& node, Branching rule);

/// Greedy best-single-flip descent with random restarts. Returns an
/// admissible A with negative margin, or nothing.
std::optional<Adjacency> attack_search(const MPNNModel& model, const GraphInstance& instance,
                                       const PerturbationSpec& spec, int restarts, std::uint64_t seed);

struct BruteForceResult {
  double min_margin = 0.0;
  Adjacency argmin;
  long long enumerated = 0;
};

/// Exact minimum margin by enumeration. Throws CapExceeded.
BruteForceResult brute_force_verdict(const MPNNModel& model, const GraphInstance& instance,
                                     const PerturbationSpec& spec, long long cap);

/// Complete decision: Robust iff the minimum margin over the perturbation set
/// is >= 0 (a margin of exactly zero counts as robust).
Verdict verify(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
               const SearchConfig& config);

}  // namespace gnncert
