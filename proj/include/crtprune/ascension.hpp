#pragma once

#include <cstdint>
#include <vector>

#include "crtprune/gw.hpp"
#include "crtprune/mechanism.hpp"
#include "crtprune/rng.hpp"

namespace crtprune {

// Law of the ascension time on (theta_lambda, 0) for a critical mechanism
// without stable part: F(theta) = 1 - (conj(theta) - theta)/eta.
class AscensionLaw {
 public:
  AscensionLaw(const Mechanism& m, double lam);

  double lam() const { return lam_; }
  double eta() const { return eta_; }
  double theta_lambda() const { return theta_lambda_; }
  const Mechanism& mechanism() const { return mech_; }

  double conjugate(double theta) const;
  double cdf(double theta) const;
  double pdf(double theta) const;
  double quantile(double u) const;

 private:
  Mechanism mech_;
  double lam_;
  double eta_;
  double theta_lambda_;
};

double ascension_cdf(const Mechanism& m, double lam, double theta);
double sample_ascension_time(const Mechanism& m, double lam, Rng& rng);
double sample_ascension_time(const Mechanism& m, double lam, std::uint64_t seed);

struct AscensionSample {
  double time = 0.0;
  // The tree is tau*_shift(psi(eta)).
  double shift = 0.0;
  double eta = 0.0;
  SpineTree tree;
};

// Spine tree tau*_{conj(A)}(psi(eta F(A))) at a given ascension time A.
Sampled<SpineTree> sample_tree_at_ascension(const AscensionLaw& law, double time, Rng& rng,
                                            const Caps& caps = {});
Sampled<AscensionSample> sample_ascension_tree(const Mechanism& m, double lam, Rng& rng,
                                               const Caps& caps = {});
Sampled<AscensionSample> sample_ascension_tree(const Mechanism& m, double lam, std::uint64_t seed,
                                               const Caps& caps = {});

struct TruncatedSpine {
  Tree tree;
  std::vector<NodeId> spine;  // graft points, then the truncated tip
  std::size_t grafts = 0;
};

// tau*_0(lam) cut at height a: Poisson(psi'(eta) a) uniform graft points, each carrying a G*.
Sampled<TruncatedSpine> sample_infinite_spine_truncated(const Mechanism& m, double lam, double a,
                                                        Rng& rng, const Caps& caps = {});
Sampled<TruncatedSpine> sample_infinite_spine_truncated(const Mechanism& m, double lam, double a,
                                                        std::uint64_t seed,
                                                        const Caps& caps = {});

}  // namespace crtprune
