#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "crtprune/gw.hpp"
#include "crtprune/mechanism.hpp"
#include "crtprune/rng.hpp"
#include "crtprune/tree.hpp"

namespace crtprune {

struct EdgeMark {
  double time = std::numeric_limits<double>::infinity();
  double position = 0.0;  // distance from the parent end of the edge
};

// A tree with its pruning marks. Each edge keeps the marks that can set its
// cut point at some theta: the first one in time, then each later mark lying
// closer to the root than all earlier ones (times increasing, positions
// decreasing). node_marks[v] is xi_v for branch nodes (+inf when absent).
struct MarkedTree {
  Tree base;
  std::vector<std::vector<EdgeMark>> edge_marks;
  std::vector<double> node_marks;
  double horizon = 0.0;
  Mechanism mech;
  double eta = 0.0;
  // Earliest mark on the edge into v, time +inf when there is none.
  EdgeMark first_mark(NodeId v) const {
    return edge_marks[v].empty() ? EdgeMark{} : edge_marks[v].front();
  }
  // Cut position on the edge into v at theta, or nullopt when uncut.
  std::optional<double> cut_at(NodeId v, double theta) const;
  // Marks later and farther from the root than a stored one are dropped.
  void add_edge_mark(NodeId v, double time, double position);
};

MarkedTree mark_tree(const Tree& t, const Mechanism& m, double lam, double horizon, Rng& rng);
MarkedTree mark_tree(const Tree& t, const Mechanism& m, double lam, double horizon,
                     std::uint64_t seed);

Tree prune_at(const MarkedTree& m, double theta);
std::vector<Tree> prune_trajectory(const MarkedTree& m, const std::vector<double>& grid);

// Law of the number K of trees grafted on a leaf when growing from theta back to q.
OffspringLaw growth_offspring_law(const Mechanism& m, double lam, double q, double theta,
                                  double tail_tol = 1e-12);

class GrowSampler {
 public:
  GrowSampler(const Mechanism& m, double lam, double q, double theta, double tail_tol = 1e-12);
  const OffspringLaw& law() const { return law_; }
  const GwSampler& plain() const { return plain_; }
  Sampled<Tree> grow(const Tree& t, Rng& rng, const Caps& caps = {}) const;

 private:
  OffspringLaw law_;
  GwSampler plain_;
};

Sampled<Tree> grow_step(const Tree& t, const Mechanism& m, double lam, double q, double theta,
                        Rng& rng, const Caps& caps = {});
Sampled<Tree> grow_step(const Tree& t, const Mechanism& m, double lam, double q, double theta,
                        std::uint64_t seed, const Caps& caps = {});

}  // namespace crtprune
