#include <algorithm>
#include <random>

#include "gnncert/bnb.hpp"

namespace gnncert {

namespace {

std::vector<EdgeUnit> flippable_units(const Adjacency& base, const PerturbationSpec& spec) {
  std::vector<EdgeUnit> units;
  if (spec.mode == PerturbationMode::UndirectedFlip) {
    for (int u = 0; u < base.size(); ++u)
      for (int v = u + 1; v < base.size(); ++v) units.emplace_back(u, v);
  } else {
    units = base.edges();
  }
  return units;
}

void toggle(Adjacency& a, const EdgeUnit& unit, bool symmetric) {
  a.toggle(unit.first, unit.second);
  if (symmetric) a.toggle(unit.second, unit.first);
}

}  // namespace

std::optional<Adjacency> attack_search(const MPNNModel& model, const GraphInstance& instance,
                                       const PerturbationSpec& spec, int restarts, std::uint64_t seed) {
  const Adjacency& base = instance.adjacency;
  const bool symmetric = spec.mode == PerturbationMode::UndirectedFlip;
  const std::vector<EdgeUnit> units = flippable_units(base, spec);
  if (units.empty() || spec.global_budget == 0) return std::nullopt;

  std::mt19937_64 rng(seed);
  for (int r = 0; r < restarts; ++r) {
    Adjacency a = base;
    if (r > 0) {
      // random admissible starting point
      std::uniform_int_distribution<int> count(1, spec.global_budget);
      std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
      const int flips = count(rng);
      for (int i = 0; i < flips; ++i) {
        const EdgeUnit& unit = units[pick(rng)];
        toggle(a, unit, symmetric);
        if (!is_admissible(a, base, spec)) toggle(a, unit, symmetric);
      }
    }
    double current = margin(model, instance, a);
    if (current < 0.0) return a;

    for (;;) {
      double best = current;
      const EdgeUnit* best_unit = nullptr;
      for (const auto& unit : units) {
        toggle(a, unit, symmetric);
        if (is_admissible(a, base, spec)) {
          const double m = margin(model, instance, a);
          if (m < best) {
            best = m;
            best_unit = &unit;
          }
        }
        toggle(a, unit, symmetric);
      }
      if (!best_unit) break;
      toggle(a, *best_unit, symmetric);
      current = best;
      if (current < 0.0) return a;
    }
  }
  return std::nullopt;
}

}  // namespace gnncert
