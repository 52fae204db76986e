#include "gnncert/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <string>

#include "gnncert/error.hpp"

namespace gnncert {

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Robust: return "robust";
    case VerdictStatus::NonRobust: return "nonrobust";
    case VerdictStatus::Timeout: return "timeout";
  }
  return "?";
}

void SearchConfig::validate() const {
  if (!(time_limit > 0.0)) throw Error(ErrorCode::InvalidSpec, "time limit must be positive");
  if (node_limit <= 0) throw Error(ErrorCode::InvalidSpec, "node limit must be positive");
  if (attack_restarts < 0) throw Error(ErrorCode::InvalidSpec, "attack restarts must be nonnegative");
  if (threads <= 0) throw Error(ErrorCode::InvalidSpec, "thread count must be positive");
}

// ---------------------------------------------------------------------------
// SearchProblem

SearchProblem::SearchProblem(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec)
    : model_(model), instance_(instance), spec_(spec) {
  model_.validate();
  instance_.validate(model_);
  spec_.validate(instance_);

  const int n = instance_.num_nodes();
  const Adjacency& base = instance_.adjacency;
  relevant_columns_.assign(n, 0);
  if (instance_.target.is_graph()) {
    std::fill(relevant_columns_.begin(), relevant_columns_.end(), 1);
  } else {
    // Columns feeding the target through the remaining layers; under P1 any
    // node with budget left may gain arbitrary in-neighbours.
    relevant_columns_[*instance_.target.node] = 1;
    for (int step = 1; step < model_.num_mp_layers(); ++step) {
      std::vector<char> next = relevant_columns_;
      for (int w = 0; w < n; ++w) {
        if (!relevant_columns_[w]) continue;
        const bool may_add = undirected() && spec_.local_budgets[w] > 0 && spec_.global_budget > 0;
        for (int u = 0; u < n; ++u)
          if (u != w && (may_add || base(u, w))) next[u] = 1;
      }
      relevant_columns_ = std::move(next);
    }
  }

  if (undirected()) {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (relevant_columns_[u] || relevant_columns_[v]) units_.emplace_back(u, v);
  } else {
    for (auto [u, v] : base.edges())
      if (relevant_columns_[v]) units_.emplace_back(u, v);
  }

  const MPNNLayer& first = model_.mp_layers.front();
  const IntervalGrid input = IntervalGrid::point(instance_.features);
  for (int f = 0; f < first.out_dim(); ++f) layer1_.push_back(build_contribution_cache(first.w_neigh, f, input));
}

double SearchProblem::impact(const EdgeUnit& unit) const {
  const auto [u, v] = unit;
  double score = 0.0;
  for (const auto& cache : layer1_) {
    if (relevant_columns_[v]) score += std::abs(cache.delta_lb(u, false)) + std::abs(cache.delta_ub(u, false));
    if (undirected() && relevant_columns_[u]) score += std::abs(cache.delta_lb(v, false)) + std::abs(cache.delta_ub(v, false));
  }
  return score;
}

bool SearchProblem::is_fixed(const Fixings& fixings, const EdgeUnit& unit) const {
  return fixings.is_fixed(unit.first, unit.second);
}

void SearchProblem::fix(Fixings& fixings, const EdgeUnit& unit, bool value) const {
  fixings.fix_pair(unit.first, unit.second, value, undirected());
}

bool SearchProblem::flip_allowed(const BudgetState& state, const EdgeUnit& unit) const {
  const auto [u, v] = unit;
  auto local_left = [&](int w) {
    return spec_.local_budgets[w] - state.removed_per_node[w] - state.added_per_node[w];
  };
  if (undirected()) {
    const int global_left = 2 * spec_.global_budget - state.total_removed() - state.total_added();
    return local_left(u) >= 1 && local_left(v) >= 1 && global_left >= 2;
  }
  return local_left(v) >= 1 && spec_.global_budget - state.total_removed() >= 1;
}

void SearchProblem::propagate_domains(Fixings& fixings) const {
  const BudgetState state = budget_state(instance_.adjacency, fixings);
  for (const auto& unit : units_) {
    if (is_fixed(fixings, unit) || flip_allowed(state, unit)) continue;
    fix(fixings, unit, instance_.adjacency(unit.first, unit.second));
  }
}

std::vector<EdgeUnit> SearchProblem::free_units(const Fixings& fixings) const {
  std::vector<EdgeUnit> out;
  for (const auto& unit : units_)
    if (!is_fixed(fixings, unit)) out.push_back(unit);
  return out;
}

Adjacency SearchProblem::completion(const Fixings& fixings) const {
  Adjacency a = instance_.adjacency;
  const int n = a.size();
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (auto value = fixings.value(u, v)) a.set(u, v, *value);
  return a;
}

// ---------------------------------------------------------------------------

double node_bound(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
                  const Fixings& fixings, Strategy strategy) {
  return propagate(model, instance, spec, strategy, &fixings).margin.lo;
}

BranchResult branch(const SearchProblem& problem, const BBNode& node, Branching rule) {
  const std::vector<EdgeUnit> free = problem.free_units(node.fixings);
  if (free.empty()) throw Error(ErrorCode::NoBranchCandidate, "every relevant edge is fixed");

  EdgeUnit chosen = free.front();
  if (rule == Branching::MaxImpact) {
    double best = -1.0;
    for (const auto& unit : free) {
      const double score = problem.impact(unit);
      if (score > best) {
        best = score;
        chosen = unit;
      }
    }
  }

  BranchResult result{chosen, node, node};
  for (auto [child, value] : {std::pair{&result.zero_child, false}, std::pair{&result.one_child, true}}) {
    problem.fix(child->fixings, chosen, value);
    problem.propagate_domains(child->fixings);
    child->budget_state = budget_state(problem.instance().adjacency, child->fixings);
    child->depth = node.depth + 1;
  }
  return result;
}

BruteForceResult brute_force_verdict(const MPNNModel& model, const GraphInstance& instance,
                                     const PerturbationSpec& spec, long long cap) {
  AdmissibleEnumerator it(instance.adjacency, spec, cap);
  BruteForceResult result;
  result.min_margin = std::numeric_limits<double>::infinity();
  while (auto a = it.next()) {
    const double m = margin(model, instance, *a);
    if (m < result.min_margin) {
      result.min_margin = m;
      result.argmin = *a;
    }
  }
  result.enumerated = it.produced();
  return result;
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct Evaluation {
  double bound = 0.0;
  double completion_margin = 0.0;
  bool leaf = false;
};

struct OpenNode {
  BBNode node;
  bool leaf = false;
};

struct BestFirst {
  bool operator()(const OpenNode& a, const OpenNode& b) const {
    if (a.node.dual_bound != b.node.dual_bound) return a.node.dual_bound > b.node.dual_bound;
    return a.node.id > b.node.id;
  }
};

class Search {
 public:
  Search(const SearchProblem& problem, const SearchConfig& config) : problem_(problem), config_(config) {}

  Verdict run() {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    verdict_.stats.strategy = config_.strategy;

    if (config_.attack_restarts > 0) {
      if (auto w = attack_search(problem_.model(), problem_.instance(), problem_.spec(), config_.attack_restarts,
                                 config_.seed)) {
        set_witness(*w, margin(problem_.model(), problem_.instance(), *w));
        verdict_.stats.time_seconds = elapsed();
        return verdict_;
      }
    }

    BBNode root{Fixings(problem_.instance().num_nodes()), 0, -std::numeric_limits<double>::infinity(), {}, 0};
    problem_.propagate_domains(root.fixings);
    root.budget_state = budget_state(problem_.instance().adjacency, root.fixings);
    auto open = evaluate_into(std::move(root));
    if (verdict_.status == VerdictStatus::NonRobust) {
      verdict_.stats.time_seconds = elapsed();
      return verdict_;
    }

    if (config_.node_selection == NodeSelection::BestBound) {
      std::priority_queue<OpenNode, std::vector<OpenNode>, BestFirst> queue;
      queue.push(std::move(open));
      while (!queue.empty()) {
        OpenNode current = queue.top();
        queue.pop();
        if (current.node.dual_bound >= 0.0) {
          robust(current.node.dual_bound);
          break;
        }
        if (limits_hit(elapsed())) break;
        for (auto& child : expand(current.node)) queue.push(std::move(child));
        if (verdict_.status == VerdictStatus::NonRobust) break;
      }
    } else {
      std::vector<OpenNode> stack{std::move(open)};
      double pruned_min = std::numeric_limits<double>::infinity();
      bool decided = false;
      while (!stack.empty()) {
        OpenNode current = std::move(stack.back());
        stack.pop_back();
        if (current.node.dual_bound >= 0.0) {
          pruned_min = std::min(pruned_min, current.node.dual_bound);
          continue;
        }
        if (limits_hit(elapsed())) {
          decided = true;
          break;
        }
        auto children = expand(current.node);
        if (verdict_.status == VerdictStatus::NonRobust) {
          decided = true;
          break;
        }
        // zero child explored first
        for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
      }
      if (!decided) robust(pruned_min);
    }
    verdict_.stats.time_seconds = elapsed();
    return verdict_;
  }

 private:
  Evaluation evaluate(const Fixings& fixings, double parent_bound) const {
    Evaluation e;
    const Adjacency a = problem_.completion(fixings);
    e.completion_margin = margin(problem_.model(), problem_.instance(), a);
    e.leaf = problem_.free_units(fixings).empty();
    if (e.leaf || e.completion_margin < 0.0) {
      e.bound = e.completion_margin;
    } else {
      const double raw = node_bound(problem_.model(), problem_.instance(), problem_.spec(), fixings, config_.strategy);
      e.bound = std::max(parent_bound, raw);
    }
    return e;
  }

  OpenNode finish(BBNode node, const Evaluation& e) {
    ++verdict_.stats.nodes_explored;
    verdict_.stats.max_depth = std::max(verdict_.stats.max_depth, node.depth);
    node.dual_bound = e.bound;
    if (e.completion_margin < 0.0 && verdict_.status != VerdictStatus::NonRobust) {
      set_witness(problem_.completion(node.fixings), e.completion_margin);
    }
    return {std::move(node), e.leaf};
  }

  OpenNode evaluate_into(BBNode node) {
    node.id = next_id_++;
    const Evaluation e = evaluate(node.fixings, node.dual_bound);
    return finish(std::move(node), e);
  }

  std::vector<OpenNode> expand(const BBNode& node) {
    BranchResult br = branch(problem_, node, config_.branching);
    br.zero_child.id = next_id_++;
    br.one_child.id = next_id_++;
    Evaluation ez, eo;
    if (config_.threads > 1) {
      auto fz = std::async(std::launch::async, [&] { return evaluate(br.zero_child.fixings, node.dual_bound); });
      eo = evaluate(br.one_child.fixings, node.dual_bound);
      ez = fz.get();
    } else {
      ez = evaluate(br.zero_child.fixings, node.dual_bound);
      eo = evaluate(br.one_child.fixings, node.dual_bound);
    }
    std::vector<OpenNode> children;
    children.push_back(finish(std::move(br.zero_child), ez));
    children.push_back(finish(std::move(br.one_child), eo));
    return children;
  }

  bool limits_hit(double seconds) {
    if (seconds >= config_.time_limit || verdict_.stats.nodes_explored >= config_.node_limit) {
      verdict_.status = VerdictStatus::Timeout;
      return true;
    }
    return false;
  }

  void robust(double bound) {
    verdict_.status = VerdictStatus::Robust;
    verdict_.certified_bound = bound;
  }

  void set_witness(const Adjacency& a, double m) {
    verdict_.status = VerdictStatus::NonRobust;
    verdict_.witness = a;
    verdict_.witness_margin = m;
  }

  const SearchProblem& problem_;
  const SearchConfig& config_;
  Verdict verdict_;
  long long next_id_ = 0;
};

}  // namespace

Verdict verify(const MPNNModel& model, const GraphInstance& instance, const PerturbationSpec& spec,
               const SearchConfig& config) {
  config.validate();
  const SearchProblem problem(model, instance, spec);
  return Search(problem, config).run();
}

}  // namespace gnncert
