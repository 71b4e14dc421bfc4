#include <algorithm>
#include <cmath>
#include <numeric>

#include "crtprune/errors.hpp"
#include "crtprune/metric.hpp"

namespace crtprune {

CodedTree coded_tree(const std::vector<double>& heights, const std::vector<double>& between) {
  std::size_t n = heights.size();
  if (n > 0 && between.size() + 1 != n) throw DomainError("need one minimum per gap");
  std::vector<double> depth{0.0};
  std::vector<std::size_t> parent{0};
  std::vector<std::size_t> stack{0};
  std::vector<std::size_t> point_node(n);
  for (std::size_t i = 0; i < n; ++i) {
    double h = std::max(heights[i], 0.0);
    double b = i == 0 ? 0.0 : std::clamp(between[i - 1], 0.0, std::min(h, depth[stack.back()]));
    std::size_t last = 0;
    while (depth[stack.back()] > b) {
      last = stack.back();
      stack.pop_back();
    }
    if (depth[stack.back()] < b) {
      std::size_t w = depth.size();
      depth.push_back(b);
      parent.push_back(stack.back());
      parent[last] = w;
      stack.push_back(w);
    }
    if (h > b) {
      depth.push_back(h);
      parent.push_back(stack.back());
      stack.push_back(depth.size() - 1);
    }
    point_node[i] = stack.back();
  }

  std::vector<std::vector<std::size_t>> kids(depth.size());
  for (std::size_t v = 1; v < depth.size(); ++v) kids[parent[v]].push_back(v);
  CodedTree out;
  out.tree.reserve(depth.size());
  std::vector<NodeId> id(depth.size(), kNoNode);
  id[0] = 0;
  std::vector<std::size_t> order{0};
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::size_t u = order[i];
    for (std::size_t c : kids[u]) {
      id[c] = out.tree.add_child(id[u], depth[c] - depth[u]);
      order.push_back(c);
    }
  }
  out.node_of_point.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.node_of_point[i] = id[point_node[i]];
  return out;
}

std::vector<double> sample_excursion_path(std::size_t n_steps, Rng& rng) {
  if (n_steps < 2) throw DomainError("excursion needs at least two steps");
  std::size_t n = n_steps;
  double sd = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> w(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) w[k] = w[k - 1] + sd * rng.normal();
  for (std::size_t k = 0; k <= n; ++k) w[k] -= static_cast<double>(k) / static_cast<double>(n) * w[n];
  std::size_t m = static_cast<std::size_t>(std::min_element(w.begin(), w.begin() + n) - w.begin());
  std::vector<double> e(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) e[k] = w[(m + k) % n] - w[m];
  e[n] = 0.0;
  return e;
}

namespace {

double path_at(const std::vector<double>& f, double y) {
  std::size_t n = f.size() - 1;
  double x = y * static_cast<double>(n);
  std::size_t k = std::min(static_cast<std::size_t>(x), n - 1);
  double frac = x - static_cast<double>(k);
  return f[k] + frac * (f[k + 1] - f[k]);
}

}  // namespace

ExcursionSample sample_excursion_subtrees(std::size_t n_steps, const std::vector<double>& lams,
                                          Rng& rng, bool allow_empty) {
  if (n_steps < 1000) throw DomainError("n_steps must be at least 1000");
  if (lams.empty()) throw DomainError("empty intensity list");
  for (std::size_t i = 0; i < lams.size(); ++i) {
    if (!(lams[i] > 0.0)) throw DomainError("intensities must be positive");
    if (i > 0 && !(lams[i] > lams[i - 1])) throw DomainError("intensities must ascend");
  }
  ExcursionSample out;
  out.lams = lams;
  out.path = sample_excursion_path(n_steps, rng);
  double top = lams.back();
  std::size_t count = rng.poisson(top);
  std::vector<std::pair<double, double>> marks(count);
  for (auto& mk : marks) {
    mk.first = rng.uniform();
    mk.second = rng.uniform() * top;
  }
  std::sort(marks.begin(), marks.end());
  for (auto& mk : marks) {
    out.mark_position.push_back(mk.first);
    out.mark_time.push_back(mk.second);
  }
  bool empty_first = std::none_of(marks.begin(), marks.end(),
                                  [&](const auto& mk) { return mk.second <= lams.front(); });
  if (empty_first && !allow_empty) throw DegenerateError("no marks at the smallest intensity");

  const auto& f = out.path;
  double n = static_cast<double>(n_steps);
  std::vector<double> heights(count), between(count > 0 ? count - 1 : 0);
  for (std::size_t i = 0; i < count; ++i) heights[i] = path_at(f, marks[i].first);
  for (std::size_t i = 0; i + 1 < count; ++i) {
    double lo = std::min(heights[i], heights[i + 1]);
    auto k0 = static_cast<std::size_t>(std::floor(marks[i].first * n)) + 1;
    auto k1 = static_cast<std::size_t>(std::ceil(marks[i + 1].first * n));
    for (std::size_t k = k0; k < k1; ++k) lo = std::min(lo, f[k]);
    between[i] = lo;
  }
  CodedTree ct = coded_tree(heights, between);
  out.host = std::move(ct.tree);
  out.mark_node = std::move(ct.node_of_point);

  for (double lam : lams) {
    std::vector<NodeId> nodes;
    PointMeasure mu;
    for (std::size_t i = 0; i < count; ++i) {
      if (out.mark_time[i] > lam) continue;
      NodeId v = out.mark_node[i];
      nodes.push_back(v);
      mu.points.push_back({v, v == 0 ? 0.0 : out.host.length(v)});
      mu.masses.push_back(1.0 / lam);
    }
    Subtree s = path_subtree(out.host, nodes);
    Tree t = extract_subtree(out.host, s, nodes);
    t.set_leaf_mass(1.0 / lam);
    out.subtrees.push_back(std::move(s));
    out.measures.push_back(std::move(mu));
    out.trees.push_back(std::move(t));
  }
  return out;
}

ExcursionSample sample_excursion_subtrees(std::size_t n_steps, const std::vector<double>& lams,
                                          std::uint64_t seed, bool allow_empty) {
  Rng rng(seed);
  return sample_excursion_subtrees(n_steps, lams, rng, allow_empty);
}

double modulus_of_continuity(const std::vector<double>& path, double delta) {
  std::size_t n = path.size() - 1;
  if (n == 0 || !(delta > 0.0)) return 0.0;
  double x = std::min(delta * static_cast<double>(n), static_cast<double>(n));
  double whole = std::floor(x + 1e-9);
  double frac = std::max(0.0, x - whole);
  auto w = static_cast<std::size_t>(whole);
  // The sup of a piecewise linear difference sits at grid pairs at most w steps
  // apart, or at a grid point against the point exactly delta away.
  double best = 0.0;
  std::vector<std::size_t> mx, mn;  // monotone deques of indices
  std::size_t hmx = 0, hmn = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    while (mx.size() > hmx && path[mx.back()] <= path[k]) mx.pop_back();
    mx.push_back(k);
    while (mn.size() > hmn && path[mn.back()] >= path[k]) mn.pop_back();
    mn.push_back(k);
    while (mx[hmx] + w < k) ++hmx;
    while (mn[hmn] + w < k) ++hmn;
    best = std::max(best, path[mx[hmx]] - path[mn[hmn]]);
  }
  if (frac > 1e-9) {
    auto at = [&](std::size_t i, double t) { return path[i] + t * (path[i + 1] - path[i]); };
    for (std::size_t k = 0; k + w < n; ++k) {
      best = std::max(best, std::fabs(at(k + w, frac) - path[k]));
      best = std::max(best, std::fabs(path[k + w + 1] - at(k, 1.0 - frac)));
    }
  }
  return best;
}

}  // namespace crtprune
