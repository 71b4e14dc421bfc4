#include "crtprune/stats.hpp"

#include <cmath>
#include <limits>

#include "crtprune/dynamics.hpp"
#include "crtprune/errors.hpp"
#include "crtprune/numerics.hpp"

namespace crtprune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_above_theta_lambda(const Mechanism& m, double lam, double theta) {
  if (!m.in_domain(theta)) throw DomainError("theta outside the mechanism domain");
  if (!(theta > theta_lambda(m, lam))) throw DomainError("theta must exceed theta_lambda");
}

}  // namespace

double mean_leaves(const Mechanism& m, double lam, double theta) {
  require_above_theta_lambda(m, lam, theta);
  double slope = m.derivative(theta);
  if (!(slope > 0.0)) return kInf;
  double eta = invert(m, lam);
  return m.increment(theta, eta) / (eta * slope);
}

LeafMoments leaf_moments(const Mechanism& m, double lam, double theta) {
  require_above_theta_lambda(m, lam, theta);
  double slope = m.derivative(theta);
  if (!(slope > 0.0)) return {kInf, kInf};
  double eta = invert(m, lam);
  double top = m.derivative(theta + eta);
  double p0 = m.increment(theta, eta) / (eta * top);
  double gap = slope / top;  // 1 - g'(1)
  double g2 = eta * m.evaluate(theta, 2) / top;
  LeafMoments out;
  out.mean = p0 / gap;
  out.second = (p0 + g2 * out.mean * out.mean) / gap;
  return out;
}

PgfSolve leaf_pgf(const Mechanism& m, double lam, double theta, double zeta) {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw DomainError("zeta must lie in [0, 1)");
  require_above_theta_lambda(m, lam, theta);
  double eta = invert(m, lam);
  double norm = eta * m.derivative(theta + eta);
  double g0 = m.increment(theta, eta) / norm;
  // x - g_theta(x) - g_theta(0)(zeta - 1), with g_theta(x) = x + psi_theta((1-x) eta)/norm.
  auto excess = [&](double x) { return -m.increment(theta, (1.0 - x) * eta) / norm - g0 * (zeta - 1.0); };
  PgfSolve out;
  out.zeta = zeta;
  double x = 0.0;
  for (long it = 1; it <= 100'000; ++it) {
    double next = x - excess(x);
    out.iterations = it;
    x = next;
    out.residual = std::fabs(excess(x));
    if (out.residual < 1e-12) {
      out.value = x;
      return out;
    }
  }
  // Fallback: excess is increasing on [0, 1] with excess(0) <= 0 <= excess(1).
  x = bisect_increasing(excess, 0.0, 1.0, 1e-15, 200);
  out.value = x;
  out.residual = std::fabs(excess(x));
  if (out.residual >= 1e-12) throw ConvergenceError("leaf pgf fixed point did not converge");
  return out;
}

double joint_leaf_pgf(const Mechanism& m, double lam, double q, double theta, double zeta,
                      double z) {
  if (!(zeta >= 0.0 && zeta < 1.0) || !(z >= 0.0 && z < 1.0))
    throw DomainError("pgf arguments must lie in [0, 1)");
  OffspringLaw grow = growth_offspring_law(m, lam, q, theta);
  double hq = leaf_pgf(m, lam, q, z).value;
  double g0 = grow.pgf(0.0);
  double w = grow.pgf(hq) + g0 * (z - 1.0);
  return leaf_pgf(m, lam, theta, zeta * w).value;
}

double martingale_R(const Tree& t, const Mechanism& m, double lam, double theta) {
  double q0 = landmarks(m).q0;
  if (!(theta > q0)) throw DomainError("martingale_R needs theta > q0");
  double eta = invert(m, lam);
  return m.derivative(theta) * static_cast<double>(leaf_count(t)) / m.increment(theta, eta);
}

double girsanov_weight(const Tree& t, const Mechanism& m, double lam, double a) {
  double q0 = landmarks(m).q0;
  if (!(q0 > 0.0)) throw DomainError("girsanov_weight needs a super-critical mechanism");
  if (!(a > 0.0)) throw DomainError("level must be positive");
  double eta = invert(m, lam);
  double level = static_cast<double>(leaves_at_level(t, a));
  return std::pow(eta / (eta - q0), level - 1.0);
}

double qq_girsanov_weight(const Tree& t, const Mechanism& m, double lam, double theta, double q,
                          double a) {
  if (!(q >= theta && theta >= 0.0) || !(a > 0.0))
    throw DomainError("qq_girsanov_weight needs q >= theta >= 0 and a > 0");
  if (q == theta) return 1.0;
  double eta = invert(m, lam);
  Tree r = restrict_to(t, a);
  double ends = static_cast<double>(leaf_count(r) + truncation_count(r));
  double exponent = ends - static_cast<double>(leaves_at_level(t, a));
  double w = std::pow(m.increment(q, eta) / m.increment(theta, eta), exponent);
  w *= std::exp((m.derivative(theta + eta) - m.derivative(q + eta)) * r.total_length());
  for (NodeId v = 0; v < r.size(); ++v) {
    std::uint32_t kappa = r.degree(v);
    if (kappa < 2) continue;
    w *= m.taylor_term(q + eta, kappa, 1.0) / m.taylor_term(theta + eta, kappa, 1.0);
  }
  return w;
}

double mart_Q(const Tree& t, const std::vector<double>& leaf_times, double z, double a,
              const Mechanism& m) {
  double q0 = landmarks(m).q0;
  if (!(q0 > 0.0)) throw DomainError("mart_Q needs a super-critical mechanism");
  if (leaf_times.size() != t.size()) throw DomainError("leaf_times must be indexed by node");
  std::vector<NodeId> kept;
  for (NodeId v = 1; v < t.size(); ++v)
    if (t.is_leaf(v) && leaf_times[v] <= z) kept.push_back(v);
  if (kept.empty()) return 1.0;
  double eta = invert(m, z);
  double level = static_cast<double>(leaves_at_level(span(t, kept), a));
  return std::pow(eta / (eta - q0), level);
}

}  // namespace crtprune
