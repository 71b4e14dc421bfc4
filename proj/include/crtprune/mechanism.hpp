#pragma once

#include <optional>
#include <vector>

namespace crtprune {

struct Atom {
  double r;
  double m;
};

struct StablePart {
  double c;
  double gamma;
};

enum class Criticality { Sub, Critical, Super };

const char* to_string(Criticality c);

struct Landmarks {
  std::optional<double> theta_star;
  double q0 = 0.0;
  Criticality criticality = Criticality::Critical;
};

// psi(u) = alpha u + beta u^2 + c u^gamma + sum m (e^{-u r} - 1 + u r), stored
// together with a shift s so that the object represents psi(u + s) - psi(s).
class Mechanism {
 public:
  Mechanism(double alpha, double beta, std::optional<StablePart> stable = std::nullopt,
            std::vector<Atom> atoms = {});
  static Mechanism quadratic(double beta, double alpha = 0.0) { return Mechanism(alpha, beta); }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const std::optional<StablePart>& stable() const { return stable_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double shift() const { return shift_; }
  bool has_stable_part() const { return stable_.has_value(); }

  // Smallest admissible evaluation point: -shift with a stable part, -inf otherwise.
  double domain_lower() const;
  bool in_domain(double q) const { return q >= domain_lower(); }

  // k-th derivative at q, k <= 64.
  double evaluate(double q, int k) const;
  double operator()(double q) const { return evaluate(q, 0); }
  double derivative(double q) const { return evaluate(q, 1); }

  // psi(theta + u) - psi(theta), computed without cancellation.
  double increment(double theta, double u) const;

  // |psi^(n)(q)| scale^n / n! for n >= 2; any n, evaluated in log space.
  double taylor_term(double q, long n, double scale) const;
  // (|psi^(n)(lo)| - |psi^(n)(hi)|) scale^n / n! for n >= 2, lo <= hi.
  double taylor_gap(double lo, double hi, long n, double scale) const;

  Mechanism shifted(double theta) const;

 private:
  double base_increment(double x0, double u) const;
  double base_derivative(double x, int k) const;
  void check_point(double x) const;

  double alpha_;
  double beta_;
  std::optional<StablePart> stable_;
  std::vector<Atom> atoms_;
  double shift_ = 0.0;
};

inline double evaluate(const Mechanism& m, double q, int k) { return m.evaluate(q, k); }
inline Mechanism shift(const Mechanism& m, double theta) { return m.shifted(theta); }

// eta >= theta* with psi(eta) = lam.
double invert(const Mechanism& m, double lam);
Landmarks landmarks(const Mechanism& m);
// The value >= theta* with the same psi level as theta.
double conjugate(const Mechanism& m, double theta);
// inf{theta : psi_theta(eta) >= 0} with eta = invert(m, lam).
double theta_lambda(const Mechanism& m, double lam);

}  // namespace crtprune
