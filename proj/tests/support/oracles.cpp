#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace oracle {

using gnncert::Activation;
using gnncert::MPNNLayer;
using gnncert::PerturbationMode;
using gnncert::Pooling;

namespace {

double act(double x, Activation a) { return a == Activation::ReLU ? std::max(0.0, x) : x; }

Matrix to_rows(const Eigen::MatrixXd& m) {
  Matrix out(m.rows(), std::vector<double>(m.cols()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

}  // namespace

Trace forward(const MPNNModel& model, const GraphInstance& g, const Adjacency& a) {
  const int n = a.size();
  std::vector<std::vector<int>> in_nbrs(n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (a(u, v)) in_nbrs[v].push_back(u);

  Trace t;
  Matrix h = to_rows(g.features);
  for (const MPNNLayer& layer : model.mp_layers) {
    const int din = layer.in_dim(), dout = layer.out_dim();
    Matrix pre(n, std::vector<double>(dout)), post = pre;
    for (int v = 0; v < n; ++v) {
      for (int j = 0; j < dout; ++j) {
        double s = layer.bias(j);
        for (int f = 0; f < din; ++f) s += layer.w_self(f, j) * h[v][f];
        for (int u : in_nbrs[v])
          for (int f = 0; f < din; ++f) s += layer.w_neigh(f, j) * h[u][f];
        pre[v][j] = s;
        post[v][j] = act(s, layer.activation);
      }
    }
    t.preact.push_back(pre);
    t.postact.push_back(post);
    h = post;
  }
  if (model.pooling == Pooling::None) {
    t.logits = h[*g.target.node];
    return t;
  }
  std::vector<double> z(h.empty() ? 0 : h[0].size(), 0.0);
  for (const auto& row : h)
    for (std::size_t f = 0; f < row.size(); ++f) z[f] += row[f];
  t.pooled = z;
  for (const MPNNLayer& layer : model.dense_head) {
    std::vector<double> pre(layer.out_dim()), post(layer.out_dim());
    for (int j = 0; j < layer.out_dim(); ++j) {
      double s = layer.bias(j);
      for (int f = 0; f < layer.in_dim(); ++f) s += layer.w_self(f, j) * z[f];
      pre[j] = s;
      post[j] = act(s, layer.activation);
    }
    t.dense_pre.push_back(pre);
    t.dense_post.push_back(post);
    z = post;
  }
  t.logits = z;
  return t;
}

double margin(const MPNNModel& model, const GraphInstance& g, const Adjacency& a) {
  const Trace t = forward(model, g, a);
  return t.logits[g.label_true] - t.logits[g.label_attack];
}

bool admissible(const Adjacency& a, const Adjacency& base, const PerturbationSpec& spec) {
  const int n = base.size();
  if (a.size() != n) return false;
  int total = 0;
  for (int v = 0; v < n; ++v) {
    int col = 0;
    for (int u = 0; u < n; ++u) {
      if (u == v) {
        if (a(u, v)) return false;
        continue;
      }
      if (spec.mode == PerturbationMode::UndirectedFlip && a(u, v) != a(v, u)) return false;
      if (spec.mode == PerturbationMode::DirectedRemoveOnly && a(u, v) && !base(u, v)) return false;
      col += a(u, v) != base(u, v);
    }
    if (col > spec.local_budgets[v]) return false;
    total += col;
  }
  const int cap = spec.mode == PerturbationMode::UndirectedFlip ? 2 * spec.global_budget : spec.global_budget;
  return total <= cap;
}

std::vector<Adjacency> all_admissible(const Adjacency& base, const PerturbationSpec& spec) {
  const int n = base.size();
  const bool sym = spec.mode == PerturbationMode::UndirectedFlip;
  std::vector<std::pair<int, int>> units;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (sym ? u < v : base(u, v) == 1) units.emplace_back(u, v);
    }
  std::vector<Adjacency> out;
  Adjacency a = base;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int flips) {
    if (flips > spec.global_budget) return;
    if (i == units.size()) {
      if (admissible(a, base, spec)) out.push_back(a);
      return;
    }
    rec(i + 1, flips);
    auto [u, v] = units[i];
    a.set(u, v, !a(u, v));
    if (sym) a.set(v, u, !a(v, u));
    rec(i + 1, flips + 1);
    a.set(u, v, !a(u, v));
    if (sym) a.set(v, u, !a(v, u));
  };
  rec(0, 0);
  return out;
}

MinMargin min_margin(const MPNNModel& model, const GraphInstance& g, const PerturbationSpec& spec) {
  MinMargin best{std::numeric_limits<double>::infinity(), g.adjacency};
  for (const auto& a : all_admissible(g.adjacency, spec)) {
    const double m = oracle::margin(model, g, a);
    if (m < best.value) best = {m, a};
  }
  return best;
}

// ---------------------------------------------------------------------------

std::string Case::describe() const {
  std::ostringstream s;
  s << "n=" << graph.num_nodes() << " layers=" << model.mp_layers.size()
    << (graph.target.is_graph() ? " graph-task" : " node-task")
    << (spec.mode == PerturbationMode::UndirectedFlip ? " p1" : " p2") << " Q=" << spec.global_budget
    << " edges=" << graph.adjacency.entry_count();
  return s.str();
}

MPNNLayer Generator::layer(int in, int out, Activation a, bool neigh) {
  MPNNLayer l;
  l.w_self.resize(in, out);
  l.w_neigh = Eigen::MatrixXd::Zero(in, out);
  l.bias.resize(out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) {
      l.w_self(i, j) = uniform(-1, 1);
      if (neigh) l.w_neigh(i, j) = uniform(-1, 1);
    }
  for (int j = 0; j < out; ++j) l.bias(j) = uniform(-0.5, 0.5);
  l.activation = a;
  return l;
}

Case Generator::next(const GenOptions& opt) {
  Case c;
  const int n = integer(opt.min_nodes, opt.max_nodes);
  const bool node_task = coin();
  const bool p1 = opt.mode == 1 || (opt.mode == 0 && coin());
  const int layers = integer(1, opt.max_layers);
  const int classes = integer(2, 3);

  int width = integer(1, opt.max_dim);
  const int d0 = width;
  const bool dense_head = !node_task && coin();
  for (int l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    const bool to_classes = last && !dense_head;
    const int out = to_classes ? classes : integer(1, opt.max_dim);
    const Activation a = to_classes && node_task ? Activation::Identity
                         : to_classes           ? (coin() ? Activation::Identity : Activation::ReLU)
                                                : Activation::ReLU;
    c.model.mp_layers.push_back(layer(width, out, a, true));
    width = out;
  }
  if (!node_task) {
    c.model.pooling = Pooling::Add;
    if (dense_head) c.model.dense_head.push_back(layer(width, classes, Activation::Identity, false));
  }

  c.graph.directed = !p1 && coin();
  c.graph.features.resize(n, d0);
  for (int v = 0; v < n; ++v)
    for (int f = 0; f < d0; ++f) c.graph.features(v, f) = uniform(-1, 1);
  c.graph.adjacency = Adjacency(n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v || (!c.graph.directed && v < u)) continue;
      if (coin(opt.edge_prob)) {
        c.graph.adjacency.set(u, v, true);
        if (!c.graph.directed) c.graph.adjacency.set(v, u, true);
      }
    }
  c.graph.target = node_task ? gnncert::Target::of_node(integer(0, n - 1)) : gnncert::Target::graph();
  c.graph.label_true = 0;
  c.graph.label_attack = 1;
  c.graph.label_true = gnncert::predicted_label(c.model, c.graph);
  c.graph.label_attack = gnncert::next_label(c.graph.label_true, classes);

  c.spec.mode = p1 ? PerturbationMode::UndirectedFlip : PerturbationMode::DirectedRemoveOnly;
  c.spec.global_budget = integer(0, opt.max_global);
  c.spec.local_budgets.resize(n);
  for (auto& q : c.spec.local_budgets) q = integer(0, opt.max_local);
  return c;
}

gnncert::Fixings random_fixings(Generator& gen, const Adjacency& target, const PerturbationSpec& spec, double prob,
                                const gnncert::Fixings* extend) {
  const int n = target.size();
  gnncert::Fixings f = extend ? *extend : gnncert::Fixings(n);
  const bool sym = spec.mode == PerturbationMode::UndirectedFlip;
  for (int u = 0; u < n; ++u)
    for (int v = sym ? u + 1 : 0; v < n; ++v) {
      if (u == v || f.is_fixed(u, v) || !gen.coin(prob)) continue;
      f.fix_pair(u, v, target(u, v), sym);
    }
  return f;
}

// ---------------------------------------------------------------------------

LpFile parse_lp(const std::string& text) {
  LpFile lp;
  std::istringstream in(text);
  std::string line, section;
  std::vector<std::string> tokens;  // pending entry
  auto flush = [&] {
    if (tokens.empty()) return;
    std::string name = tokens[0];
    name.pop_back();  // trailing ':'
    std::map<std::string, double> coefs;
    std::size_t i = 1;
    auto is_sense = [](const std::string& s) { return s == "<=" || s == ">=" || s == "="; };
    while (i < tokens.size() && !is_sense(tokens[i])) {
      if (tokens[i] == "0" && tokens.size() - i <= 3) {  // empty expression
        ++i;
        continue;
      }
      const double sign = tokens[i] == "-" ? -1.0 : 1.0;
      const double coef = std::strtod(tokens[i + 1].c_str(), nullptr);
      coefs[tokens[i + 2]] += sign * coef;
      i += 3;
    }
    if (section == "obj") {
      lp.objective = coefs;
    } else {
      lp.rows.push_back({name, coefs, tokens[i], std::strtod(tokens[i + 1].c_str(), nullptr)});
    }
    tokens.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Minimize") {
      section = "obj";
      continue;
    }
    if (line == "Subject To" || line == "Bounds" || line == "Binaries" || line == "End") {
      flush();
      section = line;
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> words;
    for (std::string w; ls >> w;) words.push_back(w);
    if (words.empty()) continue;
    if (section == "obj" || section == "Subject To") {
      if (words[0].back() == ':') flush();
      tokens.insert(tokens.end(), words.begin(), words.end());
    } else if (section == "Bounds") {
      if (words.size() == 3 && words[1] == "=") {
        const double x = std::strtod(words[2].c_str(), nullptr);
        lp.bounds[words[0]] = {x, x};
      } else if (words.size() == 5) {
        lp.bounds[words[2]] = {std::strtod(words[0].c_str(), nullptr), std::strtod(words[4].c_str(), nullptr)};
      }
    } else if (section == "Binaries") {
      lp.binaries.push_back(words[0]);
    }
  }
  flush();
  return lp;
}

std::optional<std::vector<std::pair<double, double>>> fbbt(const gnncert::MIPModel& mip,
                                                          const std::map<std::string, double>& fixed,
                                                          int max_passes) {
  constexpr double tol = 1e-7;
  const auto& vars = mip.variables();
  std::vector<std::pair<double, double>> b(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) b[i] = {vars[i].lo, vars[i].hi};
  for (const auto& [name, value] : fixed) {
    const int i = mip.find(name);
    if (i < 0) continue;
    if (value < b[i].first - tol || value > b[i].second + tol) return std::nullopt;
    b[i] = {value, value};
  }

  auto tighten = [&](int j, double lo, double hi) -> int {  // -1 empty, 1 changed, 0 same
    auto& [l, h] = b[j];
    if (vars[j].binary) {
      lo = std::ceil(lo - 1e-9);
      hi = std::floor(hi + 1e-9);
    }
    bool changed = false;
    if (lo > l + 1e-12) {
      l = lo;
      changed = true;
    }
    if (hi < h - 1e-12) {
      h = hi;
      changed = true;
    }
    if (l > h + tol) return -1;
    if (l > h) l = h = 0.5 * (l + h);
    return changed ? 1 : 0;
  };

  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (const auto& row : mip.constraints()) {
      double min_act = 0.0, max_act = 0.0;
      for (const auto& t : row.terms) {
        const auto [l, h] = b[t.var];
        min_act += std::min(t.coef * l, t.coef * h);
        max_act += std::max(t.coef * l, t.coef * h);
      }
      const bool le = row.sense != gnncert::Sense::GreaterEqual;
      const bool ge = row.sense != gnncert::Sense::LessEqual;
      if ((le && min_act > row.rhs + tol) || (ge && max_act < row.rhs - tol)) return std::nullopt;
      for (const auto& t : row.terms) {
        const auto [l, h] = b[t.var];
        const double own_min = std::min(t.coef * l, t.coef * h);
        const double own_max = std::max(t.coef * l, t.coef * h);
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        // coef * x <= rhs - min(rest), coef * x >= rhs - max(rest)
        if (le) {
          const double cap = row.rhs - (min_act - own_min);
          (t.coef > 0 ? hi : lo) = cap / t.coef;
        }
        if (ge) {
          const double floor = row.rhs - (max_act - own_max);
          (t.coef > 0 ? lo : hi) = floor / t.coef;
        }
        const int r = tighten(t.var, lo, hi);
        if (r < 0) return std::nullopt;
        changed |= r > 0;
      }
    }
    if (!changed) break;
  }
  return b;
}

}  // namespace oracle
