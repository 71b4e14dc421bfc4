#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crtprune/dynamics.hpp"
#include "crtprune/errors.hpp"
#include "crtprune/hypothesis.hpp"

using namespace crtprune;

namespace {

struct Summary {
  std::size_t leaves = 0;
  double length = 0.0;
};

// Pruned leaf count and length straight from the stored marks.
Summary brute_prune(const MarkedTree& m, double theta) {
  const Tree& t = m.base;
  std::vector<char> open(t.size(), 0);
  open[0] = 1;
  Summary s;
  for (NodeId v = 1; v < t.size(); ++v) {
    if (!open[t.parent(v)]) continue;
    double cut = t.length(v);
    for (const EdgeMark& mk : m.edge_marks[v])
      if (mk.time < theta) cut = std::min(cut, mk.position);
    if (cut < t.length(v)) {
      s.length += cut;
      ++s.leaves;
      continue;
    }
    s.length += t.length(v);
    bool cut_here = m.node_marks[v] < theta;
    if (t.degree(v) == 0 || cut_here) {
      if (!t.truncated(v)) ++s.leaves;
    } else {
      open[v] = 1;
    }
  }
  return s;
}

struct Direct {
  std::vector<std::uint64_t> leaves;
  std::vector<double> length;
};

Direct direct_sample(const Mechanism& m, double lam, double theta, std::size_t n, std::uint64_t base) {
  double eta = invert(m, lam);
  Mechanism mt = m.shifted(theta);
  GwSampler gw(mt, mt(eta));
  Direct d;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(base, i);
    Tree t = std::get<Tree>(gw.sample(rng));
    d.leaves.push_back(leaf_count(t));
    d.length.push_back(t.total_length());
  }
  return d;
}

const Mechanism kSub(0.5, 1.0, std::nullopt, {{1.0, 1.0}});

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("pruning agrees with the marks") {
    GwSampler gw(kSub, 2.0);
    for (std::size_t i = 0; i < 300; ++i) {
      Rng rng = Rng::stream(21, i);
      Tree t = std::get<Tree>(gw.sample(rng));
      MarkedTree mk = mark_tree(t, kSub, 2.0, 3.0, rng);
      std::vector<double> grid{0.0, 0.4, 1.1, 2.0, 3.0};
      auto traj = prune_trajectory(mk, grid);
      CHECK(isometric(traj[0], t));
      double prev_len = t.total_length();
      for (std::size_t k = 0; k < grid.size(); ++k) {
        Summary b = brute_prune(mk, grid[k]);
        CHECK(leaf_count(traj[k]) == b.leaves);
        CHECK(traj[k].total_length() == doctest::Approx(b.length).epsilon(1e-12));
        CHECK(traj[k].total_length() <= prev_len + 1e-12);
        prev_len = traj[k].total_length();
        double eta = invert(kSub, 2.0);
        CHECK(traj[k].leaf_mass() == doctest::Approx(1.0 / kSub.shifted(grid[k])(eta)));
      }
    }
  }

  TEST_CASE("records decrease away from the root") {
    GwSampler gw(kSub, 2.0);
    for (std::size_t i = 0; i < 300; ++i) {
      Rng rng = Rng::stream(22, i);
      Tree t = std::get<Tree>(gw.sample(rng));
      MarkedTree mk = mark_tree(t, kSub, 2.0, 1.5, rng);
      std::vector<double> rec(t.size(), 1.5);
      for (NodeId v = 1; v < t.size(); ++v) {
        double r = rec[t.parent(v)];
        const auto& list = mk.edge_marks[v];
        for (std::size_t j = 0; j < list.size(); ++j) {
          CHECK(list[j].time < r);
          CHECK(list[j].position > 0.0);
          CHECK(list[j].position < t.length(v));
          if (j > 0) {
            CHECK(list[j].time > list[j - 1].time);
            CHECK(list[j].position < list[j - 1].position);
          }
        }
        if (!list.empty()) r = list.front().time;
        if (std::isfinite(mk.node_marks[v])) {
          CHECK(t.degree(v) >= 2);
          CHECK(mk.node_marks[v] < r);
          r = mk.node_marks[v];
        }
        rec[v] = r;
      }
    }
  }

  TEST_CASE("single edge by hand") {
    Tree t;
    t.add_child(0, 1.0);
    MarkedTree mk = mark_tree(t, Mechanism::quadratic(1.0), 1.0, 1.0, 3u);
    mk.edge_marks[1].clear();
    mk.add_edge_mark(1, 0.3, 0.4);
    CHECK(prune_at(mk, 0.5).length(1) == doctest::Approx(0.4));
    CHECK(prune_at(mk, 0.2).length(1) == doctest::Approx(1.0));
    mk.add_edge_mark(1, 0.6, 0.7);  // later and higher: immaterial
    CHECK(mk.edge_marks[1].size() == 1);
    mk.add_edge_mark(1, 0.6, 0.1);
    CHECK(prune_at(mk, 0.5).length(1) == doctest::Approx(0.4));
    CHECK(prune_at(mk, 0.8).length(1) == doctest::Approx(0.1));
    mk.add_edge_mark(1, 0.1, 0.05);  // dominates both
    CHECK(mk.edge_marks[1].size() == 1);
    CHECK(mk.first_mark(1).time == 0.1);
  }

  TEST_CASE("first mark time on a unit edge") {
    // psi(u) = u^2, lam = 1: psi'(1 + z) - psi'(1) = 2z, so the first mark is Exp(2)
    Tree t;
    t.add_child(0, 1.0);
    std::vector<double> times;
    for (std::size_t i = 0; i < 100'000; ++i) {
      Rng rng = Rng::stream(20, i);
      MarkedTree mk = mark_tree(t, Mechanism::quadratic(1.0), 1.0, 50.0, rng);
      times.push_back(mk.first_mark(1).time);
      CHECK(std::isinf(mk.node_marks[1]));
    }
    MeanSe ms = mean_se(times);
    CHECK(std::fabs(ms.mean - 0.5) < 3 * ms.se);
  }

  TEST_CASE("no node marks for the quadratic mechanism") {
    GwSampler gw(Mechanism::quadratic(1.0, 0.5), 1.0);
    for (std::size_t i = 0; i < 100; ++i) {
      Rng rng = Rng::stream(19, i);
      Tree t = std::get<Tree>(gw.sample(rng));
      MarkedTree mk = mark_tree(t, Mechanism::quadratic(1.0, 0.5), 1.0, 5.0, rng);
      for (double x : mk.node_marks) CHECK(std::isinf(x));
    }
  }

  TEST_CASE("errors") {
    Tree t;
    t.add_child(0, 1.0);
    CHECK_THROWS_AS(mark_tree(t, kSub, 1.0, 0.0, 1u), HorizonError);
    MarkedTree mk = mark_tree(t, kSub, 1.0, 1.0, 1u);
    CHECK_THROWS_AS(prune_at(mk, 1.5), HorizonError);
    CHECK_THROWS_AS(prune_at(mk, -0.1), HorizonError);
    CHECK_THROWS_AS(prune_trajectory(mk, {0.5, 0.2}), HorizonError);
    CHECK_THROWS_AS(growth_offspring_law(kSub, 1.0, 1.0, 0.5), DomainError);
    double tl = theta_lambda(kSub, 1.0);
    CHECK_THROWS_AS(growth_offspring_law(kSub, 1.0, tl - 0.1, 1.0), DomainError);
  }

  TEST_CASE("pruned trees have the shifted law") {
    double lam = 2.0, theta = 0.8;
    GwSampler gw(kSub, lam);
    std::vector<std::uint64_t> leaves;
    std::vector<double> length;
    for (std::size_t i = 0; i < 40'000; ++i) {
      Rng rng = Rng::stream(23, i);
      Tree t = std::get<Tree>(gw.sample(rng));
      Tree p = prune_at(mark_tree(t, kSub, lam, theta, rng), theta);
      leaves.push_back(leaf_count(p));
      length.push_back(p.total_length());
    }
    Direct d = direct_sample(kSub, lam, theta, 40'000, 24);
    CHECK(chi2_two_sample(leaves, d.leaves).p_value > 1e-3);
    CHECK(ks_two_sample(length, d.length).p_value > 1e-3);
  }

  TEST_CASE("growth law by hand") {
    auto k = growth_offspring_law(Mechanism::quadratic(1.0), 1.0, 0.0, 1.0);
    REQUIRE(k.probs.size() >= 2);
    CHECK(std::fabs(k.probs[0] - 1.0 / 3.0) < 1e-12);
    CHECK(std::fabs(k.probs[1] - 2.0 / 3.0) < 1e-12);
    for (std::size_t n = 2; n < k.probs.size(); ++n) CHECK(k.probs[n] == doctest::Approx(0.0));
    auto a = growth_offspring_law(kSub, 1.0, -0.2, 0.9);
    double total = a.tail_mass;
    for (double p : a.probs) total += p;
    CHECK(std::fabs(total - 1.0) < 1e-12);
    for (double r : {0.1, 0.5, 0.95}) {
      double series = 0.0;
      for (std::size_t n = 0; n < a.probs.size(); ++n) series += a.probs[n] * std::pow(r, double(n));
      CHECK(a.pgf(r) == doctest::Approx(series).epsilon(1e-10));
    }
  }

  TEST_CASE("growth reaches the lower law") {
    double lam = 2.0, theta = 0.9, q = 0.1;
    double eta = invert(kSub, lam);
    Mechanism mt = kSub.shifted(theta);
    GwSampler start(mt, mt(eta));
    GrowSampler grow(kSub, lam, q, theta);
    std::vector<std::uint64_t> leaves;
    std::vector<double> length;
    for (std::size_t i = 0; i < 40'000; ++i) {
      Rng rng = Rng::stream(25, i);
      Tree t = std::get<Tree>(start.sample(rng));
      Tree g = std::get<Tree>(grow.grow(t, rng));
      CHECK(g.total_length() >= t.total_length() - 1e-12);
      leaves.push_back(leaf_count(g));
      length.push_back(g.total_length());
    }
    Direct d = direct_sample(kSub, lam, q, 40'000, 26);
    CHECK(chi2_two_sample(leaves, d.leaves).p_value > 1e-3);
    CHECK(ks_two_sample(length, d.length).p_value > 1e-3);
  }

  TEST_CASE("pruning then growing returns the start law") {
    double lam = 1.5, theta = 0.6;
    GwSampler gw(kSub, lam);
    GrowSampler grow(kSub, lam, 0.0, theta);
    std::vector<std::uint64_t> back, base;
    for (std::size_t i = 0; i < 30'000; ++i) {
      Rng rng = Rng::stream(27, i);
      Tree t = std::get<Tree>(gw.sample(rng));
      base.push_back(leaf_count(t));
      Tree p = prune_at(mark_tree(t, kSub, lam, theta, rng), theta);
      back.push_back(leaf_count(std::get<Tree>(grow.grow(p, rng))));
    }
    CHECK(chi2_two_sample(back, base).p_value > 1e-3);
  }
}
