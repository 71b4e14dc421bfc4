#include "crtprune/gw.hpp"

#include <cmath>
#include <numeric>

#include "crtprune/errors.hpp"

namespace crtprune {

namespace {
constexpr std::size_t kMaxSupport = 1'000'000;
}

AliasTable::AliasTable(const std::vector<double>& weights) {
  std::size_t n = weights.size();
  if (n == 0) throw DomainError("alias table needs at least one weight");
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("alias table weights sum to zero");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    std::uint32_t s = small.back();
    small.pop_back();
    std::uint32_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::uint32_t i : large) prob_[i] = 1.0;
  for (std::uint32_t i : small) prob_[i] = 1.0;
}

std::size_t AliasTable::sample(Rng& rng) const {
  std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

double OffspringLaw::truncated_pgf(double r) const {
  double s = 0.0;
  for (std::size_t n = probs.size(); n-- > 0;) s = s * r + probs[n];
  return s;
}

OffspringLaw offspring_law(const Mechanism& m, double lam, double tail_tol) {
  if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) throw DomainError("tail_tol must lie in (0, 1e-6]");
  double eta = invert(m, lam);
  if (!(eta > 0.0)) throw DomainError("offspring law needs eta > 0");
  double d1 = m.derivative(eta);
  double norm = eta * d1;
  OffspringLaw law;
  law.probs = {m(eta) / norm, 0.0};
  double sum = law.probs[0];
  bool finite_support = !m.has_stable_part() && m.atoms().empty();
  for (long n = 2;; ++n) {
    double p = m.taylor_term(eta, n, eta) / norm;
    law.probs.push_back(p);
    sum += p;
    if (1.0 - sum < tail_tol || finite_support) break;
    if (law.probs.size() >= kMaxSupport)
      throw TruncationError("offspring support exceeds 10^6 entries before reaching tail_tol");
  }
  law.tail_mass = std::max(0.0, 1.0 - sum);
  law.mean = 1.0 - m.derivative(0.0) / d1;
  law.pgf = [m, eta, norm](double r) { return r + m((1.0 - r) * eta) / norm; };
  law.pgf_derivative = [m, eta, d1](double r) {
    return 1.0 - m.derivative((1.0 - r) * eta) / d1;
  };
  law.alias = AliasTable(law.probs);
  return law;
}

OffspringLaw size_biased_law(const OffspringLaw& law) {
  OffspringLaw star;
  double total = 0.0;
  for (std::size_t n = 1; n < law.probs.size(); ++n) total += static_cast<double>(n) * law.probs[n];
  if (!(total > 0.0)) throw DomainError("size-biased law needs g'(1) > 0");
  star.probs.resize(law.probs.size() - 1);
  double mean = 0.0;
  for (std::size_t n = 1; n < law.probs.size(); ++n) {
    star.probs[n - 1] = static_cast<double>(n) * law.probs[n] / total;
    mean += static_cast<double>(n - 1) * star.probs[n - 1];
  }
  star.mean = mean;
  star.tail_mass = law.mean > 0.0 ? std::max(0.0, 1.0 - total / law.mean) : 0.0;
  star.allows_one = true;
  double g1 = law.mean;
  auto dg = law.pgf_derivative;
  star.pgf = [dg, g1](double r) { return dg(r) / g1; };
  std::vector<double> p = star.probs;
  star.pgf_derivative = [p](double r) {
    double s = 0.0;
    for (std::size_t n = p.size(); n-- > 1;) s = s * r + static_cast<double>(n) * p[n];
    return s;
  };
  star.alias = AliasTable(star.probs);
  return star;
}

double extinction_probability(const OffspringLaw& law) {
  if (law.mean <= 1.0 + 1e-12) return 1.0;
  double x = 0.0;
  for (int it = 0; it < 1'000'000; ++it) {
    double next = law.pgf(x);
    if (std::fabs(next - x) < 1e-13) return next;
    x = next;
  }
  throw ConvergenceError("extinction fixed point did not converge");
}

GwSampler::GwSampler(const Mechanism& m, double lam, double tail_tol)
    : mech_(m), lam_(lam), eta_(invert(m, lam)), rate_(m.derivative(eta_)),
      law_(offspring_law(m, lam, tail_tol)) {}

bool GwSampler::expand(Tree& t, NodeId at, std::size_t count, std::size_t generation,
                       double height, Rng& rng, const Caps& caps) const {
  struct Item {
    NodeId parent;
    std::size_t generation;
    double height;
  };
  std::vector<Item> stack;
  for (std::size_t i = 0; i < count; ++i) stack.push_back({at, generation, height});
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    double len = rng.exponential(rate_);
    if (it.height + len > caps.height_limit) {
      t.add_child(it.parent, caps.height_limit - it.height, true);
      if (t.size() > caps.max_nodes) return false;
      continue;
    }
    NodeId v = t.add_child(it.parent, len);
    std::size_t gen = it.generation + 1;
    if (t.size() > caps.max_nodes || gen > caps.max_depth) return false;
    std::size_t k = law_.sample(rng);
    for (std::size_t j = 0; j < k; ++j) stack.push_back({v, gen, it.height + len});
  }
  return true;
}

Sampled<Tree> GwSampler::sample(Rng& rng, const Caps& caps) const {
  Tree t;
  t.set_leaf_mass(1.0 / lam_);
  if (!expand(t, 0, 1, 0, 0.0, rng, caps)) return Exceeded{t.size(), caps.max_depth};
  return t;
}

Sampled<Tree> sample_gw(const Mechanism& m, double lam, Rng& rng, const Caps& caps) {
  return GwSampler(m, lam).sample(rng, caps);
}

Sampled<Tree> sample_gw(const Mechanism& m, double lam, std::uint64_t seed, const Caps& caps) {
  Rng rng(seed);
  return sample_gw(m, lam, rng, caps);
}

Sampled<Tree> sample_gstar(const Mechanism& m, double lam, Rng& rng, const Caps& caps) {
  GwSampler plain(m, lam);
  OffspringLaw kstar = size_biased_law(plain.law());
  Tree t;
  t.set_leaf_mass(1.0 / lam);
  std::size_t k = kstar.sample(rng);
  if (!plain.expand(t, 0, k, 0, 0.0, rng, caps)) return Exceeded{t.size(), caps.max_depth};
  return t;
}

Sampled<Tree> sample_gstar(const Mechanism& m, double lam, std::uint64_t seed, const Caps& caps) {
  Rng rng(seed);
  return sample_gstar(m, lam, rng, caps);
}

namespace {

GwSampler shifted_plain(const Mechanism& m, double lam, double theta, double tail_tol) {
  Mechanism mt = m.shifted(theta);
  double eta = invert(m, lam);
  return GwSampler(mt, mt(eta), tail_tol);
}

}  // namespace

SpineSampler::SpineSampler(const Mechanism& m, double lam, double theta, double tail_tol)
    : plain_(shifted_plain(m, lam, theta, tail_tol)),
      kstar_(size_biased_law(plain_.law())),
      stop_(0.0) {
  const Mechanism& mt = plain_.mechanism();
  double slope = mt.derivative(0.0);
  if (!(slope > 0.0)) throw DomainError("spine tree needs a sub-critical shifted mechanism");
  stop_ = slope / mt.derivative(plain_.eta());
}

Sampled<SpineTree> SpineSampler::sample(Rng& rng, const Caps& caps) const {
  SpineTree out;
  out.tree.set_leaf_mass(1.0 / plain_.lam());
  NodeId at = 0;
  double height = 0.0;
  for (std::size_t gen = 1;; ++gen) {
    double len = rng.exponential(plain_.rate());
    NodeId v = out.tree.add_child(at, len);
    out.spine.push_back(v);
    height += len;
    if (out.tree.size() > caps.max_nodes || gen > caps.max_depth)
      return Exceeded{out.tree.size(), gen};
    if (rng.bernoulli(stop_)) break;
    std::size_t k = kstar_.sample(rng);
    if (!plain_.expand(out.tree, v, k, gen, height, rng, caps))
      return Exceeded{out.tree.size(), caps.max_depth};
    at = v;
  }
  return out;
}

Sampled<SpineTree> sample_spine_tree(const Mechanism& m, double lam, double theta, Rng& rng,
                                     const Caps& caps) {
  return SpineSampler(m, lam, theta).sample(rng, caps);
}

Sampled<SpineTree> sample_spine_tree(const Mechanism& m, double lam, double theta,
                                     std::uint64_t seed, const Caps& caps) {
  Rng rng(seed);
  return sample_spine_tree(m, lam, theta, rng, caps);
}

std::optional<Tree> thin_and_span(const Tree& t, double p, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("keep probability must lie in (0, 1]");
  std::vector<NodeId> kept;
  for (NodeId v = 1; v < t.size(); ++v)
    if (t.is_leaf(v) && rng.bernoulli(p)) kept.push_back(v);
  if (kept.empty()) return std::nullopt;
  Tree out = span(t, kept);
  out.set_leaf_mass(t.leaf_mass() / p);
  return out;
}

std::optional<Tree> thin_and_span(const Tree& t, double p, std::uint64_t seed) {
  Rng rng(seed);
  return thin_and_span(t, p, rng);
}

}  // namespace crtprune
