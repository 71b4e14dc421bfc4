#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "crtprune/mechanism.hpp"
#include "crtprune/rng.hpp"
#include "crtprune/tree.hpp"

namespace crtprune {

struct Caps {
  std::size_t max_nodes = 1'000'000;
  std::size_t max_depth = 100'000;
  // Edges crossing this height are cut there and flagged (direct sampling of T^(a)).
  double height_limit = std::numeric_limits<double>::infinity();
};

// Sampling stopped at a cap; signals a probably non-compact tree.
struct Exceeded {
  std::size_t nodes = 0;
  std::size_t depth = 0;
};

template <class T>
using Sampled = std::variant<T, Exceeded>;

template <class T>
bool is_exceeded(const Sampled<T>& s) {
  return std::holds_alternative<Exceeded>(s);
}

class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

struct OffspringLaw {
  std::vector<double> probs;  // probs[n] = P(K = n)
  double tail_mass = 0.0;
  double mean = 0.0;
  bool allows_one = false;
  std::function<double(double)> pgf;             // closed form
  std::function<double(double)> pgf_derivative;  // closed form
  AliasTable alias;

  double truncated_pgf(double r) const;
  std::size_t sample(Rng& rng) const { return alias.sample(rng); }
};

OffspringLaw offspring_law(const Mechanism& m, double lam, double tail_tol = 1e-12);
// K* with pgf g'/g'(1): the size-biased law n p(n)/mean shifted down by one.
OffspringLaw size_biased_law(const OffspringLaw& law);
double extinction_probability(const OffspringLaw& law);

// Galton-Watson real tree G(psi, lam): edges Exp(psi'(eta)), offspring from offspring_law.
class GwSampler {
 public:
  GwSampler(const Mechanism& m, double lam, double tail_tol = 1e-12);

  const Mechanism& mechanism() const { return mech_; }
  const OffspringLaw& law() const { return law_; }
  double eta() const { return eta_; }
  double lam() const { return lam_; }
  double rate() const { return rate_; }

  Sampled<Tree> sample(Rng& rng, const Caps& caps = {}) const;
  // Hangs `count` independent trees (each with its own first edge) below node `at`,
  // which sits at generation `generation` and height `height`. False when a cap is hit.
  bool expand(Tree& t, NodeId at, std::size_t count, std::size_t generation, double height,
              Rng& rng, const Caps& caps) const;

 private:
  Mechanism mech_;
  double lam_;
  double eta_;
  double rate_;
  OffspringLaw law_;
};

Sampled<Tree> sample_gw(const Mechanism& m, double lam, std::uint64_t seed, const Caps& caps = {});
Sampled<Tree> sample_gw(const Mechanism& m, double lam, Rng& rng, const Caps& caps = {});

Sampled<Tree> sample_gstar(const Mechanism& m, double lam, Rng& rng, const Caps& caps = {});
Sampled<Tree> sample_gstar(const Mechanism& m, double lam, std::uint64_t seed,
                           const Caps& caps = {});

struct SpineTree {
  Tree tree;
  std::vector<NodeId> spine;  // spine nodes from the root side; the last one is the tip
};

// tau*_theta(lam): spine segments Exp(psi_theta'(eta)), stop with probability
// a = psi_theta'(0)/psi_theta'(eta), otherwise graft a G*_theta and continue.
class SpineSampler {
 public:
  SpineSampler(const Mechanism& m, double lam, double theta, double tail_tol = 1e-12);
  double stop_probability() const { return stop_; }
  double segment_rate() const { return plain_.rate(); }
  const GwSampler& plain() const { return plain_; }
  const OffspringLaw& kstar() const { return kstar_; }
  Sampled<SpineTree> sample(Rng& rng, const Caps& caps = {}) const;

 private:
  GwSampler plain_;
  OffspringLaw kstar_;
  double stop_;
};

Sampled<SpineTree> sample_spine_tree(const Mechanism& m, double lam, double theta, Rng& rng,
                                     const Caps& caps = {});
Sampled<SpineTree> sample_spine_tree(const Mechanism& m, double lam, double theta,
                                     std::uint64_t seed, const Caps& caps = {});

// Keeps each mass leaf with probability p and spans the survivors; nullopt when none survive.
std::optional<Tree> thin_and_span(const Tree& t, double p, Rng& rng);
std::optional<Tree> thin_and_span(const Tree& t, double p, std::uint64_t seed);

}  // namespace crtprune
