#include <doctest.h>

#include <cmath>
#include <map>

#include "crtprune/errors.hpp"
#include "crtprune/gw.hpp"
#include "crtprune/hypothesis.hpp"
#include "crtprune/newick.hpp"

using namespace crtprune;

namespace {

std::vector<std::uint64_t> leaf_counts(const GwSampler& gw, std::size_t n, std::uint64_t base) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(base, i);
    auto t = gw.sample(rng);
    REQUIRE_FALSE(is_exceeded(t));
    out.push_back(leaf_count(std::get<Tree>(t)));
  }
  return out;
}

}  // namespace

TEST_SUITE("gw") {
  TEST_CASE("offspring laws by hand") {
    auto q = offspring_law(Mechanism::quadratic(1.0), 1.0);
    REQUIRE(q.probs.size() == 3);
    CHECK(std::fabs(q.probs[0] - 0.5) < 1e-12);
    CHECK(q.probs[1] == 0.0);
    CHECK(std::fabs(q.probs[2] - 0.5) < 1e-12);
    auto s = offspring_law(Mechanism(0.0, 0.0, StablePart{1.0, 1.5}), 1.0, 1e-7);
    CHECK(std::fabs(s.probs[0] - 2.0 / 3.0) < 1e-10);
    CHECK(std::fabs(s.probs[2] - 0.25) < 1e-10);
    CHECK(std::fabs(s.probs[3] - 1.0 / 24.0) < 1e-10);
    CHECK(s.tail_mass < 1e-7);
  }

  TEST_CASE("atom coefficients") {
    // psi(u) = u^2 + e^{-u} - 1 + u: psi^(n)(eta) = (-1)^n e^{-eta} for n >= 3
    Mechanism m(0.0, 1.0, std::nullopt, {{1.0, 1.0}});
    double eta = invert(m, 1.0);
    double d1 = 2 * eta - std::exp(-eta) + 1.0;
    auto law = offspring_law(m, 1.0);
    CHECK(law.probs[0] == doctest::Approx(1.0 / (eta * d1)).epsilon(1e-13));
    CHECK(law.probs[2] == doctest::Approx(eta * (2.0 + std::exp(-eta)) / (2.0 * d1)).epsilon(1e-13));
    double fact = 2.0;
    for (std::size_t n = 3; n < 12; ++n) {
      fact *= double(n);
      double expect = std::pow(eta, double(n) - 1.0) * std::exp(-eta) / (fact * d1);
      CHECK(law.probs[n] == doctest::Approx(expect).epsilon(1e-11));
    }
    double total = 0.0, mean = 0.0;
    for (std::size_t n = 0; n < law.probs.size(); ++n) {
      total += law.probs[n];
      mean += double(n) * law.probs[n];
    }
    CHECK(std::fabs(total + law.tail_mass - 1.0) < 1e-14);
    CHECK(law.mean == doctest::Approx(mean).epsilon(1e-10));
    CHECK(law.mean == doctest::Approx(1.0).epsilon(1e-12));
    for (double r : {0.0, 0.3, 0.9}) {
      double series = 0.0;
      for (std::size_t n = 0; n < law.probs.size(); ++n) series += law.probs[n] * std::pow(r, double(n));
      CHECK(law.pgf(r) == doctest::Approx(series).epsilon(1e-11));
      CHECK(law.truncated_pgf(r) == doctest::Approx(series).epsilon(1e-12));
    }
  }

  TEST_CASE("tail tolerance bounds") {
    Mechanism s(0.0, 0.0, StablePart{1.0, 1.5});
    CHECK_THROWS_AS(offspring_law(s, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(offspring_law(s, 1.0, 1e-3), DomainError);
    CHECK_THROWS_AS(offspring_law(s, 1.0, 1e-12), TruncationError);
  }

  TEST_CASE("size-biased law") {
    auto law = offspring_law(Mechanism(0.0, 1.0, std::nullopt, {{1.0, 1.0}}), 1.0);
    auto star = size_biased_law(law);
    for (std::size_t n = 0; n + 1 < law.probs.size(); ++n)
      CHECK(star.probs[n] == doctest::Approx(double(n + 1) * law.probs[n + 1] / law.mean).epsilon(1e-10));
    CHECK(star.allows_one);
    for (double r : {0.2, 0.8}) CHECK(star.pgf(r) == doctest::Approx(law.pgf_derivative(r) / law.mean));
  }

  TEST_CASE("extinction against bisection") {
    auto crit = offspring_law(Mechanism::quadratic(1.0), 1.0);
    CHECK(extinction_probability(crit) == 1.0);
    Mechanism sup(-1.0, 1.0, std::nullopt, {{2.0, 0.5}});
    auto law = offspring_law(sup, 0.7);
    REQUIRE(law.mean > 1.0);
    double lo = 0.0, hi = 1.0 - 1e-9;  // g(s) - s > 0 below the root, < 0 between it and 1
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (law.pgf(mid) - mid > 0 ? lo : hi) = mid;
    }
    CHECK(std::fabs(extinction_probability(law) - lo) < 1e-10);
  }

  TEST_CASE("alias table frequencies") {
    AliasTable a({0.1, 0.0, 0.6, 0.3});
    Rng rng(5);
    std::vector<std::uint64_t> x;
    for (int i = 0; i < 200'000; ++i) x.push_back(a.sample(rng));
    CHECK(std::count(x.begin(), x.end(), 1u) == 0);
    CHECK(chi2_goodness(x, {0.1, 0.0, 0.6, 0.3}).p_value > 1e-3);
  }

  TEST_CASE("edge lengths are exponential") {
    Mechanism m = Mechanism::quadratic(1.0, 0.5);
    GwSampler gw(m, 2.0);
    CHECK(gw.rate() == doctest::Approx(m.derivative(invert(m, 2.0))));
    std::vector<double> first;
    for (std::size_t i = 0; i < 20'000; ++i) {
      Rng rng = Rng::stream(11, i);
      auto t = std::get<Tree>(gw.sample(rng));
      first.push_back(t.length(1));
      CHECK(t.degree(0) == 1);
      CHECK(t.leaf_mass() == 0.5);
    }
    double rate = gw.rate();
    CHECK(ks_one_sample(first, [rate](double x) { return 1.0 - std::exp(-rate * x); }).p_value > 1e-3);
  }

  TEST_CASE("root offspring frequencies") {
    Mechanism m(0.5, 1.0, std::nullopt, {{1.0, 2.0}});
    GwSampler gw(m, 1.5);
    std::vector<std::uint64_t> k;
    for (std::size_t i = 0; i < 50'000; ++i) {
      Rng rng = Rng::stream(12, i);
      k.push_back(std::get<Tree>(gw.sample(rng)).degree(1));
    }
    CHECK(chi2_goodness(k, gw.law().probs).p_value > 1e-3);
  }

  TEST_CASE("caps") {
    GwSampler gw(Mechanism(-1.0, 1.0), 1.0);
    Caps caps;
    caps.max_nodes = 500;
    int exceeded = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      Rng rng = Rng::stream(13, i);
      auto t = gw.sample(rng, caps);
      if (is_exceeded(t)) {
        ++exceeded;
        CHECK(std::get<Exceeded>(t).nodes > 500);
      } else {
        CHECK(std::get<Tree>(t).size() <= 500);
      }
    }
    CHECK(exceeded > 0);
    Caps cut;
    cut.height_limit = 0.7;
    for (std::size_t i = 0; i < 200; ++i) {
      Rng rng = Rng::stream(14, i);
      Tree t = std::get<Tree>(gw.sample(rng, cut));
      CHECK(t.height() <= 0.7 + 1e-12);
      auto d = t.depths();
      for (NodeId v = 1; v < t.size(); ++v)
        if (t.truncated(v)) CHECK(d[v] == doctest::Approx(0.7));
    }
  }

  TEST_CASE("same seed, same tree") {
    Mechanism m = Mechanism::quadratic(1.0);
    for (std::uint64_t s : {1u, 2u, 3u}) {
      auto a = sample_gw(m, 1.0, s), b = sample_gw(m, 1.0, s);
      if (is_exceeded(a)) continue;
      CHECK(serialize_tree(std::get<Tree>(a)) == serialize_tree(std::get<Tree>(b)));
    }
  }

  TEST_CASE("thinning lowers the intensity") {
    Mechanism m(1.0, 1.0, std::nullopt, {{0.5, 1.0}});
    GwSampler high(m, 3.0), low(m, 1.0);
    std::vector<std::uint64_t> thinned;
    for (std::size_t i = 0; thinned.size() < 30'000; ++i) {
      Rng rng = Rng::stream(15, i);
      Tree t = std::get<Tree>(high.sample(rng));
      auto s = thin_and_span(t, 1.0 / 3.0, rng);
      if (s) {
        thinned.push_back(leaf_count(*s));
        CHECK(s->leaf_mass() == doctest::Approx(1.0));
      }
    }
    auto direct = leaf_counts(low, 30'000, 16);
    CHECK(chi2_two_sample(thinned, direct).p_value > 1e-3);
    CHECK_THROWS_AS(thin_and_span(Tree{}, 0.0, 1u), DomainError);
  }

  TEST_CASE("spine sampler") {
    SpineSampler sp(Mechanism::quadratic(1.0), 1.0, 1.0);
    CHECK(sp.stop_probability() == doctest::Approx(0.5).epsilon(1e-12));
    std::map<std::size_t, int> lengths;
    for (std::size_t i = 0; i < 20'000; ++i) {
      Rng rng = Rng::stream(17, i);
      auto s = std::get<SpineTree>(sp.sample(rng));
      ++lengths[s.spine.size()];
      CHECK(s.tree.degree(s.spine.back()) == 0);
    }
    // spine length is geometric with success 1/2
    double p1 = lengths[1] / 20'000.0, p2 = lengths[2] / 20'000.0;
    CHECK(std::fabs(p1 - 0.5) < 4 * std::sqrt(0.25 / 20'000));
    CHECK(std::fabs(p2 - 0.25) < 4 * std::sqrt(0.1875 / 20'000));
  }
}
