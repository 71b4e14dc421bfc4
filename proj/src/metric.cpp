#include "crtprune/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crtprune/errors.hpp"

namespace crtprune {

double AtomicMeasure::total() const {
  return std::accumulate(masses.begin(), masses.end(), 0.0);
}

double PointMeasure::total() const {
  return std::accumulate(masses.begin(), masses.end(), 0.0);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Dinic {
 public:
  explicit Dinic(std::size_t n) : head_(n, -1), level_(n), it_(n) {}

  void add_edge(int u, int v, double cap) {
    edges_.push_back({v, head_[u], cap});
    head_[u] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({u, head_[v], 0.0});
    head_[v] = static_cast<int>(edges_.size()) - 1;
  }

  double run(int s, int t, double eps) {
    double flow = 0.0;
    eps_ = eps;
    while (bfs(s, t)) {
      it_ = head_;
      while (true) {
        double f = dfs(s, t, kInf);
        if (f <= eps_) break;
        flow += f;
      }
    }
    return flow;
  }

 private:
  struct Edge {
    int to;
    int next;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{s};
    level_[s] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      int u = queue[i];
      for (int e = head_[u]; e != -1; e = edges_[e].next) {
        if (edges_[e].cap > eps_ && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          queue.push_back(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    for (int& e = it_[u]; e != -1; e = edges_[e].next) {
      int v = edges_[e].to;
      if (edges_[e].cap <= eps_ || level_[v] != level_[u] + 1) continue;
      double f = dfs(v, t, std::min(pushed, edges_[e].cap));
      if (f > eps_) {
        edges_[e].cap -= f;
        edges_[e ^ 1].cap += f;
        return f;
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
  double eps_ = 0.0;
};

// Largest transportable mass between mu and nu along pairs at distance <= level.
double matched_mass(const std::vector<double>& mu, const std::vector<double>& nu,
                    const std::vector<double>& cross, double level, double eps) {
  std::size_t a = mu.size(), b = nu.size();
  int s = static_cast<int>(a + b), t = s + 1;
  Dinic g(a + b + 2);
  for (std::size_t i = 0; i < a; ++i) g.add_edge(s, static_cast<int>(i), mu[i]);
  for (std::size_t j = 0; j < b; ++j) g.add_edge(static_cast<int>(a + j), t, nu[j]);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j)
      if (cross[i * b + j] <= level) g.add_edge(static_cast<int>(i), static_cast<int>(a + j), kInf);
  return g.run(s, t, eps);
}

}  // namespace

double prohorov_cross(const std::vector<double>& mu, const std::vector<double>& nu,
                      const std::vector<double>& cross) {
  for (double m : mu)
    if (!(m >= 0.0)) throw DomainError("negative mass");
  for (double m : nu)
    if (!(m >= 0.0)) throw DomainError("negative mass");
  double mt = std::accumulate(mu.begin(), mu.end(), 0.0);
  double nt = std::accumulate(nu.begin(), nu.end(), 0.0);
  double top = std::max(mt, nt);
  if (top == 0.0) return 0.0;
  double eps = 1e-15 * top;

  std::vector<double> levels{0.0};
  levels.insert(levels.end(), cross.begin(), cross.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // For eps in (levels[k], levels[k+1]] the open halo uses the arcs d <= levels[k];
  // the smallest k with deficit(k) <= levels[k+1] gives the infimum.
  auto deficit = [&](std::size_t k) {
    return std::max(0.0, top - matched_mass(mu, nu, cross, levels[k], eps));
  };
  auto next = [&](std::size_t k) { return k + 1 < levels.size() ? levels[k + 1] : kInf; };
  std::size_t lo = 0, hi = levels.size() - 1;
  double at_hi = deficit(hi);
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    double d = deficit(mid);
    if (d <= next(mid)) {
      hi = mid;
      at_hi = d;
    } else {
      lo = mid + 1;
    }
  }
  return std::max(levels[hi], at_hi);
}

double prohorov_atomic(const AtomicMeasure& mu, const AtomicMeasure& nu, const DistanceTable& dist,
                       double /*tol*/) {
  std::vector<double> cross(mu.points.size() * nu.points.size());
  for (std::size_t i = 0; i < mu.points.size(); ++i)
    for (std::size_t j = 0; j < nu.points.size(); ++j)
      cross[i * nu.points.size() + j] = dist(mu.points[i], nu.points[j]);
  return prohorov_cross(mu.masses, nu.masses, cross);
}

// ---- subtrees ----

Subtree full_subtree(const Tree& host) {
  Subtree s{std::vector<double>(host.size(), 0.0)};
  for (NodeId v = 1; v < host.size(); ++v) s.kept[v] = host.length(v);
  return s;
}

Subtree path_subtree(const Tree& host, const std::vector<NodeId>& nodes) {
  Subtree s{std::vector<double>(host.size(), 0.0)};
  for (NodeId v : nodes) {
    if (v >= host.size()) throw EmbeddingError("node outside the host");
    while (v != 0 && s.kept[v] == 0.0) {
      s.kept[v] = host.length(v);
      v = host.parent(v);
    }
  }
  return s;
}

namespace {

bool full(const Tree& host, const Subtree& s, NodeId v) {
  return v == 0 || (s.kept[v] == host.length(v) && s.kept[v] > 0.0);
}

}  // namespace

void validate_subtree(const Tree& host, const Subtree& s) {
  if (s.kept.size() != host.size()) throw EmbeddingError("mask size differs from host");
  for (NodeId v = 1; v < host.size(); ++v) {
    double k = s.kept[v];
    if (!(k >= 0.0) || k > host.length(v)) throw EmbeddingError("retained length out of range");
    if (k > 0.0 && !full(host, s, host.parent(v)))
      throw EmbeddingError("retained edge below a removed node");
  }
}

Subtree restrict_subtree(const Tree& host, const Subtree& s, double r) {
  auto depth = host.depths();
  Subtree out{s.kept};
  for (NodeId v = 1; v < host.size(); ++v) {
    double base = depth[host.parent(v)];
    out.kept[v] = base >= r ? 0.0 : std::min(s.kept[v], r - base);
  }
  // a node sitting exactly at depth r stays whole, its children go
  return out;
}

Tree extract_subtree(const Tree& host, const Subtree& s, const std::vector<NodeId>& keep) {
  validate_subtree(host, s);
  std::vector<char> pinned(host.size(), 0);
  for (NodeId v : keep) pinned.at(v) = 1;
  std::vector<std::uint32_t> kids(host.size(), 0);
  for (NodeId v = 1; v < host.size(); ++v)
    if (s.kept[v] > 0.0) ++kids[host.parent(v)];

  Tree out;
  out.set_leaf_mass(host.leaf_mass());
  std::vector<NodeId> anchor(host.size(), kNoNode);
  std::vector<double> offset(host.size(), 0.0);
  anchor[0] = 0;
  for (NodeId v = 1; v < host.size(); ++v) {
    if (s.kept[v] <= 0.0) continue;
    NodeId p = host.parent(v);
    double len = offset[p] + s.kept[v];
    bool whole = full(host, s, v);
    if (whole && kids[v] == 1 && !pinned[v]) {
      anchor[v] = anchor[p];
      offset[v] = len;
      continue;
    }
    anchor[v] = out.add_child(anchor[p], len, whole && host.truncated(v));
  }
  return out;
}

PointMeasure leaf_measure(const Tree& host, double mass) {
  PointMeasure mu;
  for (NodeId v = 1; v < host.size(); ++v) {
    if (!host.is_leaf(v)) continue;
    mu.points.push_back({v, host.length(v)});
    mu.masses.push_back(mass);
  }
  return mu;
}

PointMeasure leaf_measure(const Tree& host, const Subtree& s, double mass) {
  validate_subtree(host, s);
  std::vector<char> has_child(host.size(), 0);
  for (NodeId v = 1; v < host.size(); ++v)
    if (s.kept[v] > 0.0) has_child[host.parent(v)] = 1;
  PointMeasure mu;
  for (NodeId v = 1; v < host.size(); ++v) {
    if (s.kept[v] <= 0.0) continue;
    bool whole = full(host, s, v);
    if (whole && (has_child[v] || host.truncated(v))) continue;
    mu.points.push_back({v, s.kept[v]});
    mu.masses.push_back(mass);
  }
  return mu;
}

double point_depth(const Tree& host, const std::vector<double>& depths, const TreePoint& p) {
  if (p.node == 0) return 0.0;
  return depths[host.parent(p.node)] + p.offset;
}

PointMeasure restrict_measure(const Tree& host, const PointMeasure& mu, double r) {
  auto depths = host.depths();
  PointMeasure out;
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    if (point_depth(host, depths, mu.points[i]) <= r) {
      out.points.push_back(mu.points[i]);
      out.masses.push_back(mu.masses[i]);
    }
  }
  return out;
}

std::vector<double> cross_distances(const Tree& host, const std::vector<TreePoint>& a,
                                    const std::vector<TreePoint>& b) {
  auto depths = host.depths();
  std::vector<std::uint32_t> gen(host.size(), 0);
  for (NodeId v = 1; v < host.size(); ++v) gen[v] = gen[host.parent(v)] + 1;
  auto lca = [&](NodeId u, NodeId w) {
    while (gen[u] > gen[w]) u = host.parent(u);
    while (gen[w] > gen[u]) w = host.parent(w);
    while (u != w) {
      u = host.parent(u);
      w = host.parent(w);
    }
    return u;
  };
  std::vector<double> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TreePoint& p = a[i];
    double dp = point_depth(host, depths, p);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const TreePoint& q = b[j];
      double dq = point_depth(host, depths, q);
      double d;
      if (p.node == q.node) {
        d = std::abs(p.offset - q.offset);
      } else {
        NodeId c = lca(p.node, q.node);
        if (c == p.node || c == q.node) d = std::abs(dp - dq);
        else d = dp + dq - 2.0 * depths[c];
      }
      out[i * b.size() + j] = d;
    }
  }
  return out;
}

double hausdorff_nested(const Tree& host, const Subtree& outer, const Subtree& inner) {
  validate_subtree(host, outer);
  validate_subtree(host, inner);
  for (NodeId v = 1; v < host.size(); ++v)
    if (inner.kept[v] > outer.kept[v]) throw EmbeddingError("inner subtree is not inside outer");
  // below[v]: height of the outer subtree hanging under node v
  std::vector<double> below(host.size(), 0.0);
  for (NodeId v = static_cast<NodeId>(host.size()); v-- > 1;) {
    if (outer.kept[v] <= 0.0) continue;
    double reach = outer.kept[v] + (full(host, outer, v) ? below[v] : 0.0);
    NodeId p = host.parent(v);
    below[p] = std::max(below[p], reach);
  }
  double d = 0.0;
  for (NodeId v = 1; v < host.size(); ++v) {
    if (!full(host, inner, host.parent(v)) || inner.kept[v] >= outer.kept[v]) continue;
    double over = outer.kept[v] - inner.kept[v] + (full(host, outer, v) ? below[v] : 0.0);
    d = std::max(d, over);
  }
  return d;
}

double hausdorff_nested(const Tree& big, const Subtree& small) {
  return hausdorff_nested(big, full_subtree(big), small);
}

double ghp_nested_upper(const Tree& host, const Subtree& outer, const Subtree& inner,
                        const PointMeasure& mu_outer, const PointMeasure& mu_inner) {
  double dh = hausdorff_nested(host, outer, inner);
  auto cross = cross_distances(host, mu_outer.points, mu_inner.points);
  return dh + prohorov_cross(mu_outer.masses, mu_inner.masses, cross);
}

double ghp_nested_upper(const Tree& big, const Subtree& small, const PointMeasure& mu_big,
                        const PointMeasure& mu_small) {
  return ghp_nested_upper(big, full_subtree(big), small, mu_big, mu_small);
}

double ghp_localized(const Tree& host, const Subtree& outer, const Subtree& inner,
                     const PointMeasure& mu_outer, const PointMeasure& mu_inner, double r_max,
                     std::size_t grid_n) {
  if (grid_n < 2) throw DomainError("grid needs at least two points");
  if (!(r_max > 0.0)) throw DomainError("r_max must be positive");
  auto bound = [&](double r) {
    double u = ghp_nested_upper(host, restrict_subtree(host, outer, r),
                                restrict_subtree(host, inner, r),
                                restrict_measure(host, mu_outer, r),
                                restrict_measure(host, mu_inner, r));
    return std::min(1.0, u);
  };
  double h = r_max / static_cast<double>(grid_n - 1);
  double sum = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < grid_n; ++i) {
    double r = h * static_cast<double>(i);
    double f = bound(r);
    double w = (i == 0 || i + 1 == grid_n) ? 0.5 : 1.0;
    sum += w * std::exp(-r) * f;
    last = f;
  }
  return std::min(1.0, sum * h + std::exp(-r_max) * last);
}

double ghp_localized(const Tree& big, const Subtree& small, const PointMeasure& mu_big,
                     const PointMeasure& mu_small, double r_max, std::size_t grid_n) {
  return ghp_localized(big, full_subtree(big), small, mu_big, mu_small, r_max, grid_n);
}

}  // namespace crtprune
