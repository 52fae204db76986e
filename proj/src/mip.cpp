#include "gnncert/mip.hpp"

#include <cmath>
#include <string>

#include "gnncert/error.hpp"

namespace gnncert {

std::string VarRef::name() const {
  auto join = [](std::initializer_list<int> parts) {
    std::string s;
    for (int p : parts) s += "_" + std::to_string(p);
    return s;
  };
  switch (kind) {
    case VarKind::Adjacency: return "A" + join({u, v});
    case VarKind::Feature: return "x_0" + join({v, f});
    case VarKind::Aux: return "y" + join({layer, u, v, f});
    case VarKind::PreAct: return "xb" + join({layer, v, f});
    case VarKind::PostAct: return "x" + join({layer, v, f});
    case VarKind::ReluIndicator: return "s" + join({layer, v, f});
    case VarKind::Pooled: return "p" + join({f});
    case VarKind::DensePre: return "db" + join({layer, f});
    case VarKind::DensePost: return "d" + join({layer, f});
    case VarKind::DenseIndicator: return "ds" + join({layer, f});
  }
  return "?";
}

int MIPModel::add_variable(const VarRef& ref, double lo, double hi, bool binary) {
  const std::string name = ref.name();
  if (auto it = by_name_.find(name); it != by_name_.end()) return it->second;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error(ErrorCode::InfiniteBound, "variable " + name);
  const int idx = static_cast<int>(variables_.size());
  variables_.push_back({ref, name, lo, hi, binary});
  by_name_.emplace(name, idx);
  return idx;
}

void MIPModel::add_constraint(std::vector<Term> terms, Sense sense, double rhs, const std::string& tag) {
  std::erase_if(terms, [](const Term& t) { return t.coef == 0.0; });
  for (const auto& t : terms) {
    if (!std::isfinite(t.coef)) throw Error(ErrorCode::InfiniteBound, "coefficient in row family " + tag);
  }
  if (!std::isfinite(rhs)) throw Error(ErrorCode::InfiniteBound, "right-hand side in row family " + tag);
  const int index = tag_counts_[tag]++;
  constraints_.push_back({std::move(terms), sense, rhs, tag, index});
}

int MIPModel::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int MIPModel::index_of(const VarRef& ref) const { return find(ref.name()); }

int MIPModel::count_tag(const std::string& tag) const {
  auto it = tag_counts_.find(tag);
  return it == tag_counts_.end() ? 0 : it->second;
}

int MIPModel::count_kind(VarKind kind) const {
  int c = 0;
  for (const auto& v : variables_) c += v.ref.kind == kind;
  return c;
}

namespace {

class Encoder {
 public:
  Encoder(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
          const BoundsTable& bounds, const EncodeOptions& options)
      : model_(model), inst_(instance), spec_(spec), bounds_(bounds), options_(options), n_(instance.num_nodes()) {}

  MIPModel run() {
    check_coverage();
    declare_adjacency();
    std::vector<std::vector<int>> out(n_);  // output variable per (node, feature) of the latest layer
    for (int v = 0; v < n_; ++v)
      for (int f = 0; f < model_.input_dim(); ++f) {
        const double x = inst_.features(v, f);
        const Interval box = bounds_.input.at(v, f);
        out[v].push_back(mip_.add_variable(VarRef::feature(v, f), std::min(box.lo, x), std::max(box.hi, x)));
      }
    for (int l = 1; l <= model_.num_mp_layers(); ++l) out = encode_mp_layer(l, out);

    std::vector<int> final_vars;
    if (model_.pooling == Pooling::None) {
      final_vars = out[*inst_.target.node];
    } else {
      final_vars = encode_pooling(out);
      for (int k = 1; k <= static_cast<int>(model_.dense_head.size()); ++k) final_vars = encode_dense(k, final_vars);
    }
    mip_.objective = {{1.0, final_vars[inst_.label_true]}, {-1.0, final_vars[inst_.label_attack]}};
    encode_budgets();
    return std::move(mip_);
  }

 private:
  bool undirected() const { return spec_.mode == PerturbationMode::UndirectedFlip; }
  bool has_pair(int u, int v) const { return u != v && (undirected() || inst_.adjacency(u, v)); }

  int adjacency_var(int u, int v) const {
    if (undirected() && options_.merge_symmetric_pairs && u > v) std::swap(u, v);
    return mip_.index_of(VarRef::adjacency(u, v));
  }

  void check_coverage() const {
    const int L = model_.num_mp_layers();
    if (static_cast<int>(bounds_.preact.size()) != L || static_cast<int>(bounds_.postact.size()) != L ||
        bounds_.input.rows() != n_ || bounds_.input.cols() != model_.input_dim()) {
      throw Error(ErrorCode::UnboundedVariable, "bounds table does not cover every message-passing layer");
    }
    for (int l = 0; l < L; ++l) {
      if (bounds_.preact[l].rows() != n_ || bounds_.preact[l].cols() != model_.mp_layers[l].out_dim()) {
        throw Error(ErrorCode::UnboundedVariable, "bounds of layer " + std::to_string(l + 1) + " have the wrong shape");
      }
    }
    if (model_.pooling == Pooling::Add &&
        (bounds_.pooled.size() != static_cast<std::size_t>(model_.mp_layers.back().out_dim()) ||
         bounds_.dense_pre.size() != model_.dense_head.size())) {
      throw Error(ErrorCode::UnboundedVariable, "bounds table lacks pooling or dense-head bounds");
    }
  }

  void declare_adjacency() {
    for (int u = 0; u < n_; ++u) {
      for (int v = 0; v < n_; ++v) {
        if (!has_pair(u, v)) continue;
        if (undirected() && options_.merge_symmetric_pairs && u > v) continue;
        mip_.add_variable(VarRef::adjacency(u, v), 0.0, 1.0, true);
      }
    }
    if (undirected() && !options_.merge_symmetric_pairs) {
      for (int u = 0; u < n_; ++u)
        for (int v = u + 1; v < n_; ++v)
          mip_.add_constraint({{1.0, adjacency_var(u, v)}, {-1.0, adjacency_var(v, u)}}, Sense::Equal, 0.0, "sym");
    }
  }

  /// Rows tying y = A x for one auxiliary variable.
  void encode_product(int y, int x, int a, Interval box) {
    const double lb = box.lo;
    const double ub = box.hi;
    mip_.add_constraint({{1.0, y}, {-lb, a}}, Sense::GreaterEqual, 0.0, "aux_lo");
    mip_.add_constraint({{1.0, y}, {-ub, a}}, Sense::LessEqual, 0.0, "aux_up");
    mip_.add_constraint({{1.0, y}, {-1.0, x}, {-lb, a}}, Sense::LessEqual, -lb, "aux_on_up");
    mip_.add_constraint({{1.0, y}, {-1.0, x}, {-ub, a}}, Sense::GreaterEqual, -ub, "aux_on_lo");
  }

  /// Returns the post-activation variable; `pre` already carries its bounds.
  int encode_activation(Activation act, int pre, Interval pre_box, VarRef post_ref, VarRef sigma_ref) {
    if (act == Activation::Identity) return pre;
    const Interval post_box = relu_interval(pre_box);
    const int x = mip_.add_variable(post_ref, post_box.lo, post_box.hi);
    if (pre_box.lo >= 0.0) {
      mip_.add_constraint({{1.0, x}, {-1.0, pre}}, Sense::Equal, 0.0, "relu_active");
    } else if (pre_box.hi <= 0.0) {
      mip_.add_constraint({{1.0, x}}, Sense::Equal, 0.0, "relu_inactive");
    } else {
      const int s = mip_.add_variable(sigma_ref, 0.0, 1.0, true);
      mip_.add_constraint({{1.0, x}}, Sense::GreaterEqual, 0.0, "relu_nonneg");
      mip_.add_constraint({{1.0, x}, {-1.0, pre}}, Sense::GreaterEqual, 0.0, "relu_ge");
      // x <= pre - lb (1 - s)
      mip_.add_constraint({{1.0, x}, {-1.0, pre}, {-pre_box.lo, s}}, Sense::LessEqual, -pre_box.lo, "relu_le");
      mip_.add_constraint({{1.0, x}, {-pre_box.hi, s}}, Sense::LessEqual, 0.0, "relu_on");
    }
    return x;
  }

  std::vector<std::vector<int>> encode_mp_layer(int l, const std::vector<std::vector<int>>& in) {
    const MPNNLayer& layer = model_.mp_layers[l - 1];
    const IntervalGrid& in_box = bounds_.layer_input(l);
    // aux[u][v][f]
    std::vector<std::vector<std::vector<int>>> aux(n_, std::vector<std::vector<int>>(n_));
    for (int v = 0; v < n_; ++v) {
      for (int u = 0; u < n_; ++u) {
        if (!has_pair(u, v)) continue;
        const int a = adjacency_var(u, v);
        for (int f = 0; f < layer.in_dim(); ++f) {
          const Interval box = bounds_.aux(l, u, f);
          const int y = mip_.add_variable(VarRef::aux(l, u, v, f), box.lo, box.hi);
          encode_product(y, in[u][f], a, in_box.at(u, f));
          aux[u][v].push_back(y);
        }
      }
    }

    std::vector<std::vector<int>> out(n_);
    for (int v = 0; v < n_; ++v) {
      for (int g = 0; g < layer.out_dim(); ++g) {
        const Interval pre_box = bounds_.preact[l - 1].at(v, g);
        const int pre = mip_.add_variable(VarRef::preact(l, v, g), pre_box.lo, pre_box.hi);
        std::vector<Term> row{{1.0, pre}};
        for (int f = 0; f < layer.in_dim(); ++f) row.push_back({-layer.w_self(f, g), in[v][f]});
        for (int u = 0; u < n_; ++u) {
          if (!has_pair(u, v)) continue;
          for (int f = 0; f < layer.in_dim(); ++f) row.push_back({-layer.w_neigh(f, g), aux[u][v][f]});
        }
        mip_.add_constraint(std::move(row), Sense::Equal, layer.bias[g], "layer");
        out[v].push_back(
            encode_activation(layer.activation, pre, pre_box, VarRef::postact(l, v, g), VarRef::relu(l, v, g)));
      }
    }
    return out;
  }

  std::vector<int> encode_pooling(const std::vector<std::vector<int>>& in) {
    std::vector<int> pooled;
    for (std::size_t f = 0; f < bounds_.pooled.size(); ++f) {
      const int p = mip_.add_variable(VarRef::pooled(static_cast<int>(f)), bounds_.pooled[f].lo, bounds_.pooled[f].hi);
      std::vector<Term> row{{1.0, p}};
      for (int v = 0; v < n_; ++v) row.push_back({-1.0, in[v][f]});
      mip_.add_constraint(std::move(row), Sense::Equal, 0.0, "pool");
      pooled.push_back(p);
    }
    return pooled;
  }

  std::vector<int> encode_dense(int k, const std::vector<int>& in) {
    const MPNNLayer& layer = model_.dense_head[k - 1];
    std::vector<int> out;
    for (int g = 0; g < layer.out_dim(); ++g) {
      const Interval box = bounds_.dense_pre[k - 1][g];
      const int pre = mip_.add_variable(VarRef::dense_pre(k, g), box.lo, box.hi);
      std::vector<Term> row{{1.0, pre}};
      for (int f = 0; f < layer.in_dim(); ++f) row.push_back({-layer.w_self(f, g), in[f]});
      mip_.add_constraint(std::move(row), Sense::Equal, layer.bias[g], "dense");
      out.push_back(encode_activation(layer.activation, pre, box, VarRef::dense_post(k, g), VarRef::dense_relu(k, g)));
    }
    return out;
  }

  /// flip(u, v) = A_{u,v} if A*_{u,v} = 0, else 1 - A_{u,v}; constants move to the rhs.
  void encode_budgets() {
    const int global_cap = undirected() ? 2 * spec_.global_budget : spec_.global_budget;
    std::vector<Term> global;
    int global_const = 0;
    for (int v = 0; v < n_; ++v) {
      std::vector<Term> local;
      int local_const = 0;
      for (int u = 0; u < n_; ++u) {
        if (!has_pair(u, v)) continue;
        const bool present = inst_.adjacency(u, v);
        const Term t{present ? -1.0 : 1.0, adjacency_var(u, v)};
        local.push_back(t);
        global.push_back(t);
        local_const += present;
        global_const += present;
      }
      if (!local.empty()) {
        mip_.add_constraint(merge(std::move(local)), Sense::LessEqual, spec_.local_budgets[v] - local_const, "local");
      }
    }
    if (!global.empty()) mip_.add_constraint(merge(std::move(global)), Sense::LessEqual, global_cap - global_const, "global");
  }

  /// Sums coefficients of repeated variables (merged pairs appear twice).
  static std::vector<Term> merge(std::vector<Term> terms) {
    std::vector<Term> out;
    std::map<int, std::size_t> pos;
    for (const auto& t : terms) {
      auto [it, inserted] = pos.emplace(t.var, out.size());
      if (inserted) out.push_back(t);
      else out[it->second].coef += t.coef;
    }
    return out;
  }

  const MPNNModel& model_;
  const GraphInstance& inst_;
  const PerturbationSpec& spec_;
  const BoundsTable& bounds_;
  EncodeOptions options_;
  int n_;
  MIPModel mip_;
};

}  // namespace

MIPModel encode(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                const BoundsTable& bounds, const EncodeOptions& options) {
  model.validate();
  instance.validate(model);
  spec.validate(instance);
  return Encoder(model, instance, spec, bounds, options).run();
}

Assignment induced_assignment(const MIPModel& mip, const MPNNModel& model, const GraphInstance& instance,
                              const Adjacency& adjacency) {
  const ForwardTrace trace = forward_trace(model, instance.features, adjacency);
  Assignment a;
  auto layer_input = [&](int l, int u, int f) {
    return l == 1 ? instance.features(u, f) : trace.postact[l - 2](u, f);
  };
  for (const auto& var : mip.variables()) {
    const VarRef& r = var.ref;
    double value = 0.0;
    switch (r.kind) {
      case VarKind::Adjacency: value = adjacency(r.u, r.v); break;
      case VarKind::Feature: value = instance.features(r.v, r.f); break;
      case VarKind::Aux: value = adjacency(r.u, r.v) ? layer_input(r.layer, r.u, r.f) : 0.0; break;
      case VarKind::PreAct: value = trace.preact[r.layer - 1](r.v, r.f); break;
      case VarKind::PostAct: value = trace.postact[r.layer - 1](r.v, r.f); break;
      case VarKind::ReluIndicator: value = trace.preact[r.layer - 1](r.v, r.f) > 0.0 ? 1.0 : 0.0; break;
      case VarKind::Pooled: value = trace.pooled[r.f]; break;
      case VarKind::DensePre: value = trace.dense_pre[r.layer - 1][r.f]; break;
      case VarKind::DensePost: value = trace.dense_post[r.layer - 1][r.f]; break;
      case VarKind::DenseIndicator: value = trace.dense_pre[r.layer - 1][r.f] > 0.0 ? 1.0 : 0.0; break;
    }
    a[var.name] = value;
  }
  return a;
}

namespace {

std::vector<double> dense_values(const MIPModel& mip, const Assignment& assignment) {
  std::vector<double> x;
  x.reserve(mip.variables().size());
  for (const auto& var : mip.variables()) {
    auto it = assignment.find(var.name);
    if (it == assignment.end()) throw Error(ErrorCode::MissingVariable, var.name);
    x.push_back(it->second);
  }
  return x;
}

}  // namespace

bool check_feasible(const MIPModel& mip, const Assignment& assignment, double tol) {
  const std::vector<double> x = dense_values(mip, assignment);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Variable& var = mip.variables()[i];
    if (x[i] < var.lo - tol || x[i] > var.hi + tol) return false;
    if (var.binary && std::abs(x[i] - std::round(x[i])) > tol) return false;
  }
  for (const auto& row : mip.constraints()) {
    double activity = 0.0;
    for (const auto& t : row.terms) activity += t.coef * x[t.var];
    switch (row.sense) {
      case Sense::LessEqual:
        if (activity > row.rhs + tol) return false;
        break;
      case Sense::GreaterEqual:
        if (activity < row.rhs - tol) return false;
        break;
      case Sense::Equal:
        if (std::abs(activity - row.rhs) > tol) return false;
        break;
    }
  }
  return true;
}

double objective_value(const MIPModel& mip, const Assignment& assignment) {
  const std::vector<double> x = dense_values(mip, assignment);
  double value = 0.0;
  for (const auto& t : mip.objective) value += t.coef * x[t.var];
  return value;
}

}  // namespace gnncert
