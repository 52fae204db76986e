#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gnncert/model.hpp"
#include "gnncert/perturbation.hpp"

namespace gnncert {

/// basic ignores budgets and topology, sbt spends the root budget on the
/// worst neighbour changes, abt additionally uses branch-and-bound fixings
/// and the remaining budget.
enum class Strategy { Basic, Sbt, Abt };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool within(const Interval& outer, double tol = 0.0) const { return lo >= outer.lo - tol && hi <= outer.hi + tol; }
  double width() const { return hi - lo; }
};

/// Bounds of x_{u->v,f} = A_{u,v} x_{u,f}: [min{0, lo}, max{0, hi}].
Interval aux_interval(Interval x);
/// Bounds of max{0, x}.
Interval relu_interval(Interval preact);

/// Range of sum_f w_f x_f over the box, split on the sign of each weight.
Interval contribution(std::span<const double> weights, std::span<const Interval> x);

/// Row-major N x d grid of intervals.
class IntervalGrid {
 public:
  IntervalGrid() = default;
  IntervalGrid(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  /// Degenerate [x, x] boxes.
  static IntervalGrid point(const Eigen::MatrixXd& values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Interval& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const Interval& at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<const Interval> row(int r) const { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Interval> data_;
};

/// Per-node contribution bounds lb_{u->v}, ub_{u->v} for one weight column.
/// They do not depend on v; the change caused by toggling the edge u -> v is
/// -lb when u is currently a neighbour of v and +lb otherwise.
struct ContributionCache {
  std::vector<double> lb;
  std::vector<double> ub;

  double delta_lb(int u, bool neighbour) const { return neighbour ? -lb[u] : lb[u]; }
  double delta_ub(int u, bool neighbour) const { return neighbour ? -ub[u] : ub[u]; }
};

ContributionCache build_contribution_cache(const Eigen::MatrixXd& weights, int f, const IntervalGrid& prev);

/// Which in-edges of one column are present, which may still change, and
/// how many changes are allowed.
struct ColumnState {
  std::vector<char> current;
  std::vector<char> candidate;
  int budget = 0;
};

ColumnState column_state(int v, const Adjacency& base, const PerturbationSpec& spec, Strategy strategy,
                         const Fixings* fixings);

struct PropagationStats {
  long long contribution_evals = 0;
  long long selections = 0;
};

Interval basic_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev);
Interval basic_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                             const PerturbationSpec& spec);
Interval sbt_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                           const PerturbationSpec& spec);
/// Throws InconsistentFixings for fixings no admissible A can satisfy.
Interval abt_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                           const PerturbationSpec& spec, const Fixings& fixings);

struct BoundsTable {
  Strategy strategy = Strategy::Basic;
  IntervalGrid input;
  std::vector<IntervalGrid> preact;   // one grid per message-passing layer
  std::vector<IntervalGrid> postact;
  std::vector<Interval> pooled;
  std::vector<std::vector<Interval>> dense_pre;
  std::vector<std::vector<Interval>> dense_post;
  Interval margin;  // f_{c*} - f_c
  PropagationStats stats;

  /// Input grid of message-passing layer l (1-based).
  const IntervalGrid& layer_input(int l) const { return l == 1 ? input : postact[l - 2]; }
  /// Bounds of the auxiliary product feeding layer l from node u, feature f.
  Interval aux(int l, int u, int f) const { return aux_interval(layer_input(l).at(u, f)); }
};

/// Layer-by-layer interval propagation. `fixings` may be null (no fixings);
/// under Basic and Sbt they are substituted without re-deriving budgets.
/// `input` overrides the degenerate feature box.
BoundsTable propagate(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                      Strategy strategy, const Fixings* fixings = nullptr, const IntervalGrid* input = nullptr);

}  // namespace gnncert
