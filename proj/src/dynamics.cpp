#include "crtprune/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "crtprune/errors.hpp"
#include "crtprune/numerics.hpp"

namespace crtprune {

std::optional<double> MarkedTree::cut_at(NodeId v, double theta) const {
  std::optional<double> cut;
  for (const EdgeMark& mk : edge_marks[v]) {
    if (!(mk.time < theta)) break;
    cut = mk.position;
  }
  return cut;
}

void MarkedTree::add_edge_mark(NodeId v, double time, double position) {
  if (v == 0 || v >= base.size()) throw PositionError("no edge above this node");
  auto& list = edge_marks[v];
  for (const EdgeMark& mk : list)
    if (mk.time <= time && mk.position <= position) return;
  std::erase_if(list, [&](const EdgeMark& mk) { return mk.time >= time && mk.position >= position; });
  auto at = std::find_if(list.begin(), list.end(), [&](const EdgeMark& mk) { return mk.time > time; });
  list.insert(at, {time, position});
}

MarkedTree mark_tree(const Tree& t, const Mechanism& m, double lam, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw HorizonError("horizon must be positive");
  double eta = invert(m, lam);
  MarkedTree out{t, std::vector<std::vector<EdgeMark>>(t.size()),
                 std::vector<double>(t.size(), std::numeric_limits<double>::infinity()),
                 horizon, m, eta};
  double slope = m.derivative(eta);
  auto rise = [&](double z) { return m.derivative(eta + z) - slope; };
  std::vector<double> record(t.size(), horizon);
  for (NodeId v = 1; v < t.size(); ++v) {
    double r = record[t.parent(v)];
    // Marks on an edge are Poisson with intensity dx psi''(eta + z) dz. The next
    // useful one after (time, pos) is the first later mark below pos.
    double reach = t.length(v), level = 0.0, top = rise(r);
    while (reach > 0.0) {
      double e = rng.exponential(1.0);
      if (!(e < reach * (top - level))) break;
      level += e / reach;
      double target = level;
      double time = solve_increasing([&](double z) { return rise(z) - target; },
                                     [&](double z) { return m.evaluate(eta + z, 2); }, 0.0, r,
                                     1e-14);
      reach *= rng.uniform_open();
      out.edge_marks[v].push_back({time, reach});
    }
    if (!out.edge_marks[v].empty()) r = out.edge_marks[v].front().time;
    std::uint32_t kappa = t.degree(v);
    if (kappa >= 2) {
      double u = rng.uniform_open();
      double at_zero = m.taylor_term(eta, kappa, 1.0);
      auto survival = [&](double z) { return m.taylor_term(eta + z, kappa, 1.0) / at_zero; };
      if (survival(r) < u) {
        // survival decreases from 1; find z with survival(z) = u.
        double xi = bisect_increasing([&](double z) { return u - survival(z); }, 0.0, r, 1e-12);
        out.node_marks[v] = xi;
        r = xi;
      }
    }
    record[v] = r;
  }
  return out;
}

MarkedTree mark_tree(const Tree& t, const Mechanism& m, double lam, double horizon,
                     std::uint64_t seed) {
  Rng rng(seed);
  return mark_tree(t, m, lam, horizon, rng);
}

Tree prune_at(const MarkedTree& m, double theta) {
  if (!(theta >= 0.0) || theta > m.horizon) throw HorizonError("theta outside [0, horizon]");
  const Tree& t = m.base;
  Tree out;
  out.set_leaf_mass(1.0 / m.mech.increment(theta, m.eta));
  std::vector<NodeId> map(t.size(), kNoNode);
  map[0] = 0;
  for (NodeId v = 1; v < t.size(); ++v) {
    NodeId p = map[t.parent(v)];
    if (p == kNoNode) continue;
    if (auto cut = m.cut_at(v, theta)) {
      out.add_child(p, *cut);
      continue;
    }
    NodeId w = out.add_child(p, t.length(v), t.truncated(v));
    if (m.node_marks[v] < theta) continue;
    map[v] = w;
  }
  return out;
}

std::vector<Tree> prune_trajectory(const MarkedTree& m, const std::vector<double>& grid) {
  std::vector<Tree> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] < grid[i - 1]) throw HorizonError("trajectory grid must be sorted");
    out.push_back(prune_at(m, grid[i]));
  }
  return out;
}

OffspringLaw growth_offspring_law(const Mechanism& m, double lam, double q, double theta,
                                  double tail_tol) {
  if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) throw DomainError("tail_tol must lie in (0, 1e-6]");
  if (!(theta > q)) throw DomainError("growth needs theta > q");
  if (!(q > theta_lambda(m, lam))) throw DomainError("growth needs q > theta_lambda");
  if (!m.in_domain(q)) throw DomainError("q outside the mechanism domain");
  double eta = invert(m, lam);
  double top = m.increment(theta, eta);
  double bottom = m.increment(q, eta);
  OffspringLaw law;
  law.allows_one = true;
  law.probs = {bottom / top, eta * (m.derivative(theta + eta) - m.derivative(q + eta)) / top};
  double sum = law.probs[0] + law.probs[1];
  bool finite_support = !m.has_stable_part() && m.atoms().empty();
  if (!finite_support) {
    for (long k = 2;; ++k) {
      double p = m.taylor_gap(q + eta, theta + eta, k, eta) / top;
      law.probs.push_back(p);
      sum += p;
      if (1.0 - sum < tail_tol) break;
      if (law.probs.size() >= 1'000'000)
        throw TruncationError("growth law support exceeds 10^6 entries before reaching tail_tol");
    }
  }
  law.tail_mass = std::max(0.0, 1.0 - sum);
  law.mean = eta * (m.derivative(theta) - m.derivative(q)) / top;
  law.pgf = [m, eta, q, theta, top](double r) {
    double u = eta * (1.0 - r);
    return 1.0 - (m.increment(theta, u) - m.increment(q, u)) / top;
  };
  law.pgf_derivative = [m, eta, q, theta, top](double r) {
    double u = eta * (1.0 - r);
    return eta * (m.derivative(theta + u) - m.derivative(q + u)) / top;
  };
  law.alias = AliasTable(law.probs);
  return law;
}

namespace {

GwSampler grown_plain(const Mechanism& m, double lam, double q, double tail_tol) {
  double eta = invert(m, lam);
  Mechanism mq = m.shifted(q);
  return GwSampler(mq, mq(eta), tail_tol);
}

}  // namespace

GrowSampler::GrowSampler(const Mechanism& m, double lam, double q, double theta, double tail_tol)
    : law_(growth_offspring_law(m, lam, q, theta, tail_tol)),
      plain_(grown_plain(m, lam, q, tail_tol)) {}

Sampled<Tree> GrowSampler::grow(const Tree& t, Rng& rng, const Caps& caps) const {
  Tree out = t;
  out.set_leaf_mass(1.0 / plain_.lam());
  bool unary = false;
  for (NodeId v = 1; v < t.size(); ++v) {
    if (!t.is_leaf(v)) continue;
    std::size_t k = law_.sample(rng);
    if (k == 1) unary = true;
    if (k > 0 && !plain_.expand(out, v, k, 0, 0.0, rng, caps))
      return Exceeded{out.size(), caps.max_depth};
  }
  if (!unary) return out;
  // A single graft on a leaf only extends its edge; contract to keep the tree reduced.
  std::vector<NodeId> ends;
  for (NodeId v = 1; v < out.size(); ++v)
    if (out.degree(v) == 0) ends.push_back(v);
  return span(out, ends);
}

Sampled<Tree> grow_step(const Tree& t, const Mechanism& m, double lam, double q, double theta,
                        Rng& rng, const Caps& caps) {
  return GrowSampler(m, lam, q, theta).grow(t, rng, caps);
}

Sampled<Tree> grow_step(const Tree& t, const Mechanism& m, double lam, double q, double theta,
                        std::uint64_t seed, const Caps& caps) {
  Rng rng(seed);
  return grow_step(t, m, lam, q, theta, rng, caps);
}

}  // namespace crtprune
