#include "gnncert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "gnncert/error.hpp"

namespace gnncert {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Basic: return "basic";
    case Strategy::Sbt: return "sbt";
    case Strategy::Abt: return "abt";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "basic") return Strategy::Basic;
  if (name == "sbt") return Strategy::Sbt;
  if (name == "abt") return Strategy::Abt;
  throw Error(ErrorCode::ParseError, "unknown strategy '" + name + "'");
}

Interval aux_interval(Interval x) { return {std::min(0.0, x.lo), std::max(0.0, x.hi)}; }

Interval relu_interval(Interval preact) { return {std::max(0.0, preact.lo), std::max(0.0, preact.hi)}; }

Interval contribution(std::span<const double> weights, std::span<const Interval> x) {
  if (weights.size() != x.size()) throw Error(ErrorCode::DimensionMismatch, "weight and bound lengths differ");
  Interval out;
  for (std::size_t f = 0; f < weights.size(); ++f) {
    const double w = weights[f];
    if (w >= 0.0) {
      out.lo += w * x[f].lo;
      out.hi += w * x[f].hi;
    } else {
      out.lo += w * x[f].hi;
      out.hi += w * x[f].lo;
    }
  }
  return out;
}

IntervalGrid IntervalGrid::point(const Eigen::MatrixXd& values) {
  IntervalGrid g(static_cast<int>(values.rows()), static_cast<int>(values.cols()));
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) g.at(r, c) = {values(r, c), values(r, c)};
  return g;
}

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, int f) {
  return {m.data() + static_cast<std::size_t>(f) * m.rows(), static_cast<std::size_t>(m.rows())};
}

/// Sum of the k most negative (lower side) or most positive (upper side)
/// deltas; ties resolve by node index.
double select_extreme(std::vector<std::pair<double, int>>& deltas, int k, bool lower) {
  if (k <= 0 || deltas.empty()) return 0.0;
  auto less = [lower](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    const double ka = lower ? a.first : -a.first;
    const double kb = lower ? b.first : -b.first;
    return ka != kb ? ka < kb : a.second < b.second;
  };
  if (static_cast<int>(deltas.size()) > k) {
    std::nth_element(deltas.begin(), deltas.begin() + k, deltas.end(), less);
    deltas.resize(k);
  }
  double sum = 0.0;
  for (const auto& d : deltas) sum += d.first;
  return sum;
}

/// The one-column bound shared by all strategies: contributions of the
/// current neighbours plus the best `state.budget` changes among candidates.
Interval column_bound(const Interval& self, double bias, const ContributionCache& neigh, const ColumnState& state,
                      PropagationStats& stats, std::vector<std::pair<double, int>>& scratch) {
  Interval out{self.lo + bias, self.hi + bias};
  const int n = static_cast<int>(state.current.size());
  for (int u = 0; u < n; ++u) {
    if (state.current[u]) {
      out.lo += neigh.lb[u];
      out.hi += neigh.ub[u];
    }
  }

  scratch.clear();
  for (int u = 0; u < n; ++u) {
    if (!state.candidate[u]) continue;
    const double d = neigh.delta_lb(u, state.current[u]);
    if (d < 0.0) scratch.emplace_back(d, u);
  }
  out.lo += select_extreme(scratch, state.budget, true);
  ++stats.selections;

  scratch.clear();
  for (int u = 0; u < n; ++u) {
    if (!state.candidate[u]) continue;
    const double d = neigh.delta_ub(u, state.current[u]);
    if (d > 0.0) scratch.emplace_back(d, u);
  }
  out.hi += select_extreme(scratch, state.budget, false);
  ++stats.selections;
  return out;
}

Interval single_bound(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const ColumnState& state) {
  if (prev.rows() != static_cast<int>(state.current.size()) || prev.cols() != layer.in_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "previous bounds do not match the layer");
  }
  if (f < 0 || f >= layer.out_dim()) throw Error(ErrorCode::DimensionMismatch, "output feature out of range");
  const ContributionCache cache = build_contribution_cache(layer.w_neigh, f, prev);
  const Interval self = contribution(column(layer.w_self, f), prev.row(v));
  PropagationStats stats;
  std::vector<std::pair<double, int>> scratch;
  return column_bound(self, layer.bias[f], cache, state, stats, scratch);
}

void check_node(int v, int n) {
  if (v < 0 || v >= n) throw Error(ErrorCode::DimensionMismatch, "node index out of range");
}

}  // namespace

ContributionCache build_contribution_cache(const Eigen::MatrixXd& weights, int f, const IntervalGrid& prev) {
  ContributionCache cache;
  cache.lb.resize(prev.rows());
  cache.ub.resize(prev.rows());
  const auto w = column(weights, f);
  for (int u = 0; u < prev.rows(); ++u) {
    const Interval c = contribution(w, prev.row(u));
    cache.lb[u] = c.lo;
    cache.ub[u] = c.hi;
  }
  return cache;
}

ColumnState column_state(int v, const Adjacency& base, const PerturbationSpec& spec, Strategy strategy,
                         const Fixings* fixings) {
  const int n = base.size();
  const bool remove_only = spec.mode == PerturbationMode::DirectedRemoveOnly;
  ColumnState s;
  s.current.assign(n, 0);
  s.candidate.assign(n, 0);
  for (int u = 0; u < n; ++u) {
    if (u == v) continue;
    const auto fixed = fixings ? fixings->value(u, v) : std::nullopt;
    s.current[u] = fixed ? *fixed : base(u, v);
    // P2 never adds edges, so absent entries are structurally zero.
    s.candidate[u] = !fixed && !(remove_only && !base(u, v));
  }
  switch (strategy) {
    case Strategy::Basic:
      s.budget = n;
      break;
    case Strategy::Sbt:
      s.budget = remaining_local_budget(spec, empty_budget_state(n), v);
      break;
    case Strategy::Abt:
      s.budget = fixings ? remaining_local_budget(spec, budget_state(base, *fixings), v)
                         : remaining_local_budget(spec, empty_budget_state(n), v);
      break;
  }
  return s;
}

Interval basic_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev) {
  const int n = prev.rows();
  check_node(v, n);
  ColumnState all;
  all.current.assign(n, 0);
  all.candidate.assign(n, 1);
  all.candidate[v] = 0;
  all.budget = n;
  return single_bound(layer, v, f, prev, all);
}

Interval basic_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                             const PerturbationSpec& spec) {
  check_node(v, base.size());
  return single_bound(layer, v, f, prev, column_state(v, base, spec, Strategy::Basic, nullptr));
}

Interval sbt_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                           const PerturbationSpec& spec) {
  check_node(v, base.size());
  return single_bound(layer, v, f, prev, column_state(v, base, spec, Strategy::Sbt, nullptr));
}

Interval abt_preact_bounds(const MPNNLayer& layer, int v, int f, const IntervalGrid& prev, const Adjacency& base,
                           const PerturbationSpec& spec, const Fixings& fixings) {
  check_node(v, base.size());
  check_fixings(base, spec, fixings);
  return single_bound(layer, v, f, prev, column_state(v, base, spec, Strategy::Abt, &fixings));
}

namespace {

IntervalGrid propagate_layer(const MPNNLayer& layer, const IntervalGrid& prev, const std::vector<ColumnState>& states,
                             PropagationStats& stats) {
  const int n = prev.rows();
  IntervalGrid pre(n, layer.out_dim());
  std::vector<std::pair<double, int>> scratch;
  scratch.reserve(n);
  for (int f = 0; f < layer.out_dim(); ++f) {
    const ContributionCache neigh = build_contribution_cache(layer.w_neigh, f, prev);
    const auto w_self = column(layer.w_self, f);
    stats.contribution_evals += 2LL * n;
    for (int v = 0; v < n; ++v) {
      const Interval self = contribution(w_self, prev.row(v));
      pre.at(v, f) = column_bound(self, layer.bias[f], neigh, states[v], stats, scratch);
    }
  }
  return pre;
}

IntervalGrid activate(const IntervalGrid& pre, Activation act) {
  if (act == Activation::Identity) return pre;
  IntervalGrid post(pre.rows(), pre.cols());
  for (int r = 0; r < pre.rows(); ++r)
    for (int c = 0; c < pre.cols(); ++c) post.at(r, c) = relu_interval(pre.at(r, c));
  return post;
}

std::vector<Interval> dense_preact(const MPNNLayer& layer, const std::vector<Interval>& input) {
  std::vector<Interval> out(layer.out_dim());
  for (int f = 0; f < layer.out_dim(); ++f) {
    const Interval c = contribution(column(layer.w_self, f), input);
    out[f] = {c.lo + layer.bias[f], c.hi + layer.bias[f]};
  }
  return out;
}

/// Layer whose single output column is f_{c*} - f_c of `layer`.
MPNNLayer difference_layer(const MPNNLayer& layer, int c_star, int c) {
  MPNNLayer d;
  d.w_self = layer.w_self.col(c_star) - layer.w_self.col(c);
  d.w_neigh = layer.w_neigh.col(c_star) - layer.w_neigh.col(c);
  d.bias = Eigen::VectorXd::Constant(1, layer.bias[c_star] - layer.bias[c]);
  d.activation = Activation::Identity;
  return d;
}

Interval difference(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }

}  // namespace

BoundsTable propagate(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                      Strategy strategy, const Fixings* fixings, const IntervalGrid* input) {
  const int n = instance.num_nodes();
  if (static_cast<int>(spec.local_budgets.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "local budget length differs from node count");
  }
  if (fixings) check_fixings(instance.adjacency, spec, *fixings);

  BoundsTable table;
  table.strategy = strategy;
  table.input = input ? *input : IntervalGrid::point(instance.features);
  if (table.input.rows() != n || table.input.cols() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "input box does not match the instance");
  }

  std::vector<ColumnState> states;
  states.reserve(n);
  for (int v = 0; v < n; ++v) states.push_back(column_state(v, instance.adjacency, spec, strategy, fixings));

  const IntervalGrid* prev = &table.input;
  for (const auto& layer : model.mp_layers) {
    table.preact.push_back(propagate_layer(layer, *prev, states, table.stats));
    table.postact.push_back(activate(table.preact.back(), layer.activation));
    prev = &table.postact.back();
  }

  const int c_star = instance.label_true;
  const int c = instance.label_attack;
  const MPNNLayer& last_mp = model.mp_layers.back();
  const int L = model.num_mp_layers();
  std::vector<std::pair<double, int>> scratch;

  if (model.pooling == Pooling::None) {
    const int t = instance.target.node.value_or(0);
    if (last_mp.activation == Activation::Identity) {
      const MPNNLayer diff = difference_layer(last_mp, c_star, c);
      const ContributionCache neigh = build_contribution_cache(diff.w_neigh, 0, table.layer_input(L));
      const Interval self = contribution(column(diff.w_self, 0), table.layer_input(L).row(t));
      table.margin = column_bound(self, diff.bias[0], neigh, states[t], table.stats, scratch);
    } else {
      table.margin = difference(table.postact.back().at(t, c_star), table.postact.back().at(t, c));
    }
    return table;
  }

  const IntervalGrid& last = table.postact.back();
  table.pooled.assign(last.cols(), Interval{});
  for (int v = 0; v < n; ++v) {
    for (int f = 0; f < last.cols(); ++f) {
      table.pooled[f].lo += last.at(v, f).lo;
      table.pooled[f].hi += last.at(v, f).hi;
    }
  }
  const std::vector<Interval>* h = &table.pooled;
  for (const auto& layer : model.dense_head) {
    table.dense_pre.push_back(dense_preact(layer, *h));
    auto post = table.dense_pre.back();
    if (layer.activation == Activation::ReLU)
      for (auto& iv : post) iv = relu_interval(iv);
    table.dense_post.push_back(std::move(post));
    h = &table.dense_post.back();
  }

  if (!model.dense_head.empty()) {
    const MPNNLayer& out = model.dense_head.back();
    if (out.activation == Activation::Identity) {
      const std::vector<Interval>& in = model.dense_head.size() == 1 ? table.pooled : table.dense_post[table.dense_post.size() - 2];
      const MPNNLayer diff = difference_layer(out, c_star, c);
      table.margin = dense_preact(diff, in)[0];
    } else {
      table.margin = difference(table.dense_post.back()[c_star], table.dense_post.back()[c]);
    }
  } else if (last_mp.activation == Activation::Identity) {
    const MPNNLayer diff = difference_layer(last_mp, c_star, c);
    const ContributionCache neigh = build_contribution_cache(diff.w_neigh, 0, table.layer_input(L));
    Interval sum;
    for (int v = 0; v < n; ++v) {
      const Interval self = contribution(column(diff.w_self, 0), table.layer_input(L).row(v));
      const Interval iv = column_bound(self, diff.bias[0], neigh, states[v], table.stats, scratch);
      sum.lo += iv.lo;
      sum.hi += iv.hi;
    }
    table.margin = sum;
  } else {
    table.margin = difference(table.pooled[c_star], table.pooled[c]);
  }
  return table;
}

}  // namespace gnncert
