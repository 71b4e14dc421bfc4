#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "crtprune/rng.hpp"
#include "crtprune/tree.hpp"

namespace testsupport {

// Random rooted tree with a single root edge, 0..3 children per node and a
// hard generation limit. Some leaves are flagged as truncation points.
inline crtprune::Tree random_tree(std::uint64_t seed, std::size_t max_gen = 6,
                                  double trunc_prob = 0.0) {
  crtprune::Rng rng(seed);
  crtprune::Tree t;
  std::vector<std::pair<crtprune::NodeId, std::size_t>> todo;
  todo.push_back({t.add_child(0, 0.1 + rng.uniform()), 1});
  while (!todo.empty()) {
    auto [v, g] = todo.back();
    todo.pop_back();
    std::size_t k = g >= max_gen ? 0 : std::size_t(rng.below(4));
    if (k == 1) k = 2;
    for (std::size_t i = 0; i < k; ++i) todo.push_back({t.add_child(v, 0.05 + rng.uniform()), g + 1});
    if (k == 0 && rng.bernoulli(trunc_prob)) t.set_truncated(v, true);
  }
  return t;
}

// Integral over a of leaves_at_level(t, a): exact for a step function whose
// jumps sit at node depths.
template <class F>
double integrate_steps(const std::vector<double>& breaks, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double lo = breaks[i], hi = breaks[i + 1];
    if (hi > lo) s += (hi - lo) * f(0.5 * (lo + hi));
  }
  return s;
}

}  // namespace testsupport
