#include "crtprune/ascension.hpp"

#include <algorithm>
#include <cmath>

#include "crtprune/errors.hpp"
#include "crtprune/numerics.hpp"

namespace crtprune {

namespace {

const Mechanism& require_critical(const Mechanism& m) {
  if (m.has_stable_part()) throw DomainError("ascension needs a mechanism without stable part");
  if (landmarks(m).criticality != Criticality::Critical)
    throw DomainError("ascension needs a critical mechanism");
  return m;
}

}  // namespace

AscensionLaw::AscensionLaw(const Mechanism& m, double lam)
    : mech_(require_critical(m)), lam_(lam), eta_(invert(m, lam)),
      theta_lambda_(crtprune::theta_lambda(m, lam)) {}

double AscensionLaw::conjugate(double theta) const {
  if (theta >= 0.0) return theta;
  double level = mech_(theta);
  double hi = -theta;
  for (int i = 0; mech_(hi) < level; ++i) {
    if (i > 2000) throw ConvergenceError("could not bracket the conjugate");
    hi *= 2.0;
  }
  return solve_increasing([&](double u) { return mech_(u) - level; },
                          [&](double u) { return mech_.derivative(u); }, 0.0, hi, 1e-14);
}

double AscensionLaw::cdf(double theta) const {
  if (!(theta >= theta_lambda_ && theta < 0.0))
    throw DomainError("ascension cdf needs theta in [theta_lambda, 0)");
  if (theta == theta_lambda_) return 0.0;
  return std::clamp(1.0 - (conjugate(theta) - theta) / eta_, 0.0, 1.0);
}

double AscensionLaw::pdf(double theta) const {
  if (!(theta > theta_lambda_ && theta < 0.0))
    throw DomainError("ascension density needs theta in (theta_lambda, 0)");
  return (1.0 - mech_.derivative(theta) / mech_.derivative(conjugate(theta))) / eta_;
}

double AscensionLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  return bisect_increasing([&](double th) { return cdf(th) - u; }, theta_lambda_, 0.0, 1e-10);
}

double ascension_cdf(const Mechanism& m, double lam, double theta) {
  return AscensionLaw(m, lam).cdf(theta);
}

double sample_ascension_time(const Mechanism& m, double lam, Rng& rng) {
  return AscensionLaw(m, lam).quantile(rng.uniform_open());
}

double sample_ascension_time(const Mechanism& m, double lam, std::uint64_t seed) {
  Rng rng(seed);
  return sample_ascension_time(m, lam, rng);
}

Sampled<SpineTree> sample_tree_at_ascension(const AscensionLaw& law, double time, Rng& rng,
                                            const Caps& caps) {
  double shift = law.conjugate(time);
  double eta_time = law.eta() - shift + time;
  SpineSampler spine(law.mechanism(), law.mechanism()(eta_time), shift);
  return spine.sample(rng, caps);
}

Sampled<AscensionSample> sample_ascension_tree(const Mechanism& m, double lam, Rng& rng,
                                               const Caps& caps) {
  AscensionLaw law(m, lam);
  AscensionSample out;
  out.time = law.quantile(rng.uniform_open());
  out.shift = law.conjugate(out.time);
  out.eta = law.eta() - out.shift + out.time;
  auto tree = sample_tree_at_ascension(law, out.time, rng, caps);
  if (is_exceeded(tree)) return std::get<Exceeded>(tree);
  out.tree = std::move(std::get<SpineTree>(tree));
  return out;
}

Sampled<AscensionSample> sample_ascension_tree(const Mechanism& m, double lam, std::uint64_t seed,
                                               const Caps& caps) {
  Rng rng(seed);
  return sample_ascension_tree(m, lam, rng, caps);
}

Sampled<TruncatedSpine> sample_infinite_spine_truncated(const Mechanism& m, double lam, double a,
                                                        Rng& rng, const Caps& caps) {
  if (!(a > 0.0)) throw DomainError("spine height must be positive");
  require_critical(m);
  GwSampler plain(m, lam);
  OffspringLaw kstar = size_biased_law(plain.law());
  TruncatedSpine out;
  out.tree.set_leaf_mass(1.0 / lam);
  out.grafts = rng.poisson(plain.rate() * a);
  std::vector<double> at(out.grafts);
  for (double& x : at) x = rng.uniform() * a;
  std::sort(at.begin(), at.end());
  NodeId cur = 0;
  double prev = 0.0;
  std::size_t gen = 0;
  for (double x : at) {
    cur = out.tree.add_child(cur, x - prev);
    out.spine.push_back(cur);
    prev = x;
    ++gen;
    if (!plain.expand(out.tree, cur, kstar.sample(rng), gen, x, rng, caps))
      return Exceeded{out.tree.size(), caps.max_depth};
  }
  out.spine.push_back(out.tree.add_child(cur, a - prev, true));
  return out;
}

Sampled<TruncatedSpine> sample_infinite_spine_truncated(const Mechanism& m, double lam, double a,
                                                        std::uint64_t seed, const Caps& caps) {
  Rng rng(seed);
  return sample_infinite_spine_truncated(m, lam, a, rng, caps);
}

}  // namespace crtprune
