#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crtprune/rng.hpp"
#include "crtprune/tree.hpp"

namespace crtprune {

struct AtomicMeasure {
  std::vector<std::size_t> points;
  std::vector<double> masses;
  double total() const;
  void add(std::size_t point, double mass) {
    points.push_back(point);
    masses.push_back(mass);
  }
};

// Dense symmetric distance table over point ids 0..n-1.
class DistanceTable {
 public:
  explicit DistanceTable(std::size_t n) : n_(n), d_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// Prohorov distance between finite atomic measures (open halo, unequal totals allowed).
// The value is exact: feasibility is decided by max-flow at every breakpoint found
// by binary search over the sorted distance levels; tol is accepted for interface
// symmetry and bounds nothing.
double prohorov_atomic(const AtomicMeasure& mu, const AtomicMeasure& nu, const DistanceTable& dist,
                       double tol = 1e-12);
// Same, with the cross distances given directly: cross[i * nu.size() + j].
double prohorov_cross(const std::vector<double>& mu, const std::vector<double>& nu,
                      const std::vector<double>& cross);

// A subtree of a host tree: kept[v] is the retained length of the edge into v,
// measured from the parent end (kept[v] > 0 requires the parent node retained).
struct Subtree {
  std::vector<double> kept;
};

Subtree full_subtree(const Tree& host);
// Union of the root paths to the given nodes (whole edges).
Subtree path_subtree(const Tree& host, const std::vector<NodeId>& nodes);
Subtree restrict_subtree(const Tree& host, const Subtree& s, double r);
void validate_subtree(const Tree& host, const Subtree& s);
// Materializes a subtree as its own tree; unary unmarked nodes are contracted
// unless listed in `keep`.
Tree extract_subtree(const Tree& host, const Subtree& s, const std::vector<NodeId>& keep = {});

struct PointMeasure {
  std::vector<TreePoint> points;
  std::vector<double> masses;
  double total() const;
};

// Mass leaves of the host, each with the given mass.
PointMeasure leaf_measure(const Tree& host, double mass);
// Leaves of the subtree (cut points and childless retained nodes that are not
// truncation points of the host), each with the given mass.
PointMeasure leaf_measure(const Tree& host, const Subtree& s, double mass);
PointMeasure restrict_measure(const Tree& host, const PointMeasure& mu, double r);

double point_depth(const Tree& host, const std::vector<double>& depths, const TreePoint& p);
// Tree distances between two point lists of the host: out[i * b.size() + j].
std::vector<double> cross_distances(const Tree& host, const std::vector<TreePoint>& a,
                                    const std::vector<TreePoint>& b);

// sup over points of outer of the distance to inner, for inner inside outer.
double hausdorff_nested(const Tree& host, const Subtree& outer, const Subtree& inner);
double hausdorff_nested(const Tree& big, const Subtree& small);

// d_H + Prohorov at the identity embedding: an upper bound on the rooted GHP distance.
double ghp_nested_upper(const Tree& host, const Subtree& outer, const Subtree& inner,
                        const PointMeasure& mu_outer, const PointMeasure& mu_inner);
double ghp_nested_upper(const Tree& big, const Subtree& small, const PointMeasure& mu_big,
                        const PointMeasure& mu_small);

// Trapezoid rule for the e^{-r}(1 ^ bound(r)) integral on [0, r_max] plus its tail.
double ghp_localized(const Tree& host, const Subtree& outer, const Subtree& inner,
                     const PointMeasure& mu_outer, const PointMeasure& mu_inner, double r_max,
                     std::size_t grid_n);
double ghp_localized(const Tree& big, const Subtree& small, const PointMeasure& mu_big,
                     const PointMeasure& mu_small, double r_max, std::size_t grid_n);

// Tree coded by a function sampled at points y_1 < ... < y_N: heights[i] = f(y_i),
// between[i] = min of f on [y_i, y_{i+1}]. Each point maps to a node (points on
// the path of others become internal nodes).
struct CodedTree {
  Tree tree;
  std::vector<NodeId> node_of_point;
};
CodedTree coded_tree(const std::vector<double>& heights, const std::vector<double>& between);

struct ExcursionSample {
  std::vector<double> path;  // normalized excursion on the grid k / n_steps
  std::vector<double> mark_position;
  std::vector<double> mark_time;  // auxiliary uniform time in [0, lam_max]
  Tree host;                      // tree spanned by every mark
  std::vector<NodeId> mark_node;
  std::vector<double> lams;
  std::vector<Subtree> subtrees;     // tree(lam) inside host
  std::vector<PointMeasure> measures;  // mass 1/lam on each of its marks
  std::vector<Tree> trees;           // tree(lam) on its own
};

// Bridge on the grid k / n_steps, cyclically shifted at its minimum.
std::vector<double> sample_excursion_path(std::size_t n_steps, Rng& rng);

ExcursionSample sample_excursion_subtrees(std::size_t n_steps, const std::vector<double>& lams,
                                          Rng& rng, bool allow_empty = false);
ExcursionSample sample_excursion_subtrees(std::size_t n_steps, const std::vector<double>& lams,
                                          std::uint64_t seed, bool allow_empty = false);

// sup |f(x) - f(y)| over |x - y| <= delta for the piecewise linear path on [0, 1].
double modulus_of_continuity(const std::vector<double>& path, double delta);

}  // namespace crtprune
