#include "crtprune/mechanism.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "crtprune/errors.hpp"
#include "crtprune/numerics.hpp"

namespace crtprune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxOrder = 64;
constexpr double kCriticalTol = 1e-13;

// e^{-y} - 1 + y
double phi(double y) {
  if (std::fabs(y) < 0.1) {
    double term = y * y / 2.0;
    double sum = 0.0;
    for (int k = 3; k < 30 && term != 0.0; ++k) {
      sum += term;
      term *= -y / k;
    }
    return sum;
  }
  return std::expm1(-y) + y;
}

double falling(double g, int k) {
  double p = 1.0;
  for (int j = 0; j < k; ++j) p *= g - j;
  return p;
}

// log |g (g-1) ... (g-n+1)| for n >= 2 and g in (1, 2).
double log_abs_falling(double g, long n) {
  return std::log(g) + std::log(g - 1.0) + std::lgamma(static_cast<double>(n) - g) -
         std::lgamma(2.0 - g);
}

}  // namespace

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::Sub:
      return "sub-critical";
    case Criticality::Critical:
      return "critical";
    case Criticality::Super:
      return "super-critical";
  }
  return "?";
}

Mechanism::Mechanism(double alpha, double beta, std::optional<StablePart> stable,
                     std::vector<Atom> atoms)
    : alpha_(alpha), beta_(beta), stable_(stable), atoms_(std::move(atoms)) {
  if (!std::isfinite(alpha_)) throw DomainError("alpha must be finite");
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw DomainError("beta must be >= 0");
  if (stable_) {
    if (!(stable_->c >= 0.0) || !std::isfinite(stable_->c))
      throw DomainError("stable coefficient must be >= 0");
    if (!(stable_->gamma > 1.0 && stable_->gamma < 2.0))
      throw DomainError("stable exponent must lie in (1, 2)");
    if (stable_->c == 0.0) stable_.reset();
  }
  for (const Atom& a : atoms_) {
    if (!(a.r > 0.0) || !(a.m > 0.0) || !std::isfinite(a.r) || !std::isfinite(a.m))
      throw DomainError("atoms need r > 0 and m > 0");
  }
  if (!(beta_ > 0.0) && !stable_)
    throw DomainError("mechanism needs beta > 0 or a stable part");
}

double Mechanism::domain_lower() const { return stable_ ? -shift_ : -kInf; }

void Mechanism::check_point(double x) const {
  if (std::isnan(x)) throw DomainError("evaluation point is NaN");
  if (stable_ && x < 0.0)
    throw DomainError("stable part needs a non-negative argument, got " + std::to_string(x));
}

double Mechanism::base_increment(double x0, double u) const {
  double v = alpha_ * u + beta_ * u * (u + 2.0 * x0);
  if (stable_) {
    double g = stable_->gamma;
    if (x0 == 0.0) {
      v += stable_->c * std::pow(u, g);
    } else {
      v += stable_->c * std::pow(x0, g) * std::expm1(g * std::log1p(u / x0));
    }
  }
  for (const Atom& a : atoms_) {
    double y = u * a.r;
    v += a.m * (std::exp(-x0 * a.r) * phi(y) - y * std::expm1(-x0 * a.r));
  }
  return v;
}

double Mechanism::base_derivative(double x, int k) const {
  double v = 0.0;
  if (k == 1) {
    v = alpha_ + 2.0 * beta_ * x;
  } else if (k == 2) {
    v = 2.0 * beta_;
  }
  if (stable_) {
    double g = stable_->gamma;
    if (x == 0.0) {
      if (k >= 2) v += falling(g, k) > 0.0 ? kInf : -kInf;
    } else {
      v += stable_->c * falling(g, k) * std::pow(x, g - k);
    }
  }
  for (const Atom& a : atoms_) {
    if (k == 1) {
      v -= a.m * a.r * std::expm1(-x * a.r);
    } else {
      double sign = (k % 2 == 0) ? 1.0 : -1.0;
      v += sign * a.m * std::pow(a.r, k) * std::exp(-x * a.r);
    }
  }
  return v;
}

double Mechanism::evaluate(double q, int k) const {
  if (k < 0) throw OrderError("negative derivative order");
  if (k > kMaxOrder) throw OrderError("derivative order " + std::to_string(k) + " exceeds 64");
  double x = q + shift_;
  check_point(x);
  if (k == 0) return base_increment(shift_, q);
  return base_derivative(x, k);
}

double Mechanism::increment(double theta, double u) const {
  check_point(shift_ + theta);
  check_point(shift_ + theta + u);
  return base_increment(shift_ + theta, u);
}

double Mechanism::taylor_term(double q, long n, double scale) const {
  if (n < 2) throw OrderError("taylor_term needs n >= 2");
  double x = q + shift_;
  check_point(x);
  if (scale == 0.0) return 0.0;
  double v = (n == 2) ? beta_ * scale * scale : 0.0;
  double log_fact = std::lgamma(static_cast<double>(n) + 1.0);
  if (stable_) {
    double g = stable_->gamma;
    if (x == 0.0) return kInf;
    v += stable_->c * std::exp(log_abs_falling(g, n) - log_fact + g * std::log(x) +
                               static_cast<double>(n) * std::log(scale / x));
  }
  for (const Atom& a : atoms_) {
    v += a.m * std::exp(static_cast<double>(n) * std::log(a.r * scale) - x * a.r - log_fact);
  }
  return v;
}

double Mechanism::taylor_gap(double lo, double hi, long n, double scale) const {
  if (n < 2) throw OrderError("taylor_gap needs n >= 2");
  double xl = lo + shift_;
  double xh = hi + shift_;
  check_point(xl);
  if (scale == 0.0 || hi == lo) return 0.0;
  double log_fact = std::lgamma(static_cast<double>(n) + 1.0);
  double v = 0.0;
  if (stable_) {
    double g = stable_->gamma;
    if (xl == 0.0) return kInf;
    double head = stable_->c * std::exp(log_abs_falling(g, n) - log_fact + g * std::log(xl) +
                                        static_cast<double>(n) * std::log(scale / xl));
    v += head * -std::expm1((static_cast<double>(n) - g) * std::log(xl / xh));
  }
  for (const Atom& a : atoms_) {
    double head =
        a.m * std::exp(static_cast<double>(n) * std::log(a.r * scale) - xl * a.r - log_fact);
    v += head * -std::expm1(-a.r * (xh - xl));
  }
  return v;
}

Mechanism Mechanism::shifted(double theta) const {
  double s = shift_ + theta;
  if (stable_ && s < 0.0) throw DomainError("stable part forbids a net negative shift");
  Mechanism m = *this;
  m.shift_ = s;
  return m;
}

namespace {

std::optional<double> find_theta_star(const Mechanism& m) {
  auto d1 = [&](double u) { return m.evaluate(u, 1); };
  auto d2 = [&](double u) { return m.evaluate(u, 2); };
  double lower = m.domain_lower();
  if (std::isfinite(lower)) {
    double at_lower = d1(lower);
    if (at_lower > 0.0) return std::nullopt;
    if (at_lower == 0.0) return lower;
    double hi = lower + 1.0;
    for (int i = 0; d1(hi) < 0.0; ++i) {
      if (i > 2000) throw ConvergenceError("no root of psi' found");
      hi = lower + 2.0 * (hi - lower);
    }
    return solve_increasing(d1, d2, lower, hi, 1e-14);
  }
  double lo = 0.0;
  double hi = 0.0;
  if (d1(0.0) > 0.0) {
    lo = -1.0;
    for (int i = 0; d1(lo) > 0.0; ++i) {
      if (i > 2000) throw ConvergenceError("no root of psi' found");
      lo *= 2.0;
    }
  } else {
    hi = 1.0;
    for (int i = 0; d1(hi) < 0.0; ++i) {
      if (i > 2000) throw ConvergenceError("no root of psi' found");
      hi *= 2.0;
    }
  }
  return solve_increasing(d1, d2, lo, hi, 1e-14);
}

}  // namespace

Landmarks landmarks(const Mechanism& m) {
  Landmarks out;
  auto d1 = [&](double u) { return m.evaluate(u, 1); };
  out.theta_star = find_theta_star(m);
  double slope = d1(0.0);
  if (std::fabs(slope) <= kCriticalTol) {
    out.criticality = Criticality::Critical;
  } else if (slope > 0.0) {
    out.criticality = Criticality::Sub;
  } else {
    out.criticality = Criticality::Super;
  }
  out.q0 = out.criticality == Criticality::Super ? invert(m, 0.0) : 0.0;
  return out;
}

double invert(const Mechanism& m, double lam) {
  if (std::isnan(lam)) throw DomainError("intensity is NaN");
  std::optional<double> star = find_theta_star(m);
  double lo = star ? *star : m.domain_lower();
  double flo = m(lo);
  if (lam <= flo) {
    if (lam < flo - 1e-12) throw DomainError("intensity below psi(theta*)");
    return lo;
  }
  double step = 1.0;
  double hi = lo + step;
  for (int i = 0; m(hi) < lam; ++i) {
    if (i > 2000) throw ConvergenceError("could not bracket psi^{-1}");
    step *= 2.0;
    hi = lo + step;
  }
  return solve_increasing([&](double u) { return m(u) - lam; },
                          [&](double u) { return m.evaluate(u, 1); }, lo, hi, 1e-13);
}

double conjugate(const Mechanism& m, double theta) {
  if (!m.in_domain(theta)) throw DomainError("theta outside the mechanism domain");
  std::optional<double> star = find_theta_star(m);
  if (!star || theta >= *star) return theta;
  return invert(m, m(theta));
}

double theta_lambda(const Mechanism& m, double lam) {
  if (!(lam > 0.0)) throw DomainError("theta_lambda needs lam > 0");
  double eta = invert(m, lam);
  auto f = [&](double th) { return m.increment(th, eta); };
  auto df = [&](double th) { return m.evaluate(th + eta, 1) - m.evaluate(th, 1); };
  double lower = m.domain_lower();
  double lo;
  if (std::isfinite(lower)) {
    if (f(lower) >= 0.0) return lower;
    lo = lower;
  } else {
    lo = -eta;
    for (int i = 0; f(lo) >= 0.0; ++i) {
      if (i > 2000) throw ConvergenceError("could not bracket theta_lambda");
      lo *= 2.0;
    }
  }
  return solve_increasing(f, df, lo, 0.0, 1e-13);
}

}  // namespace crtprune
