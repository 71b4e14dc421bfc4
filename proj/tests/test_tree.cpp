#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crtprune/errors.hpp"
#include "crtprune/tree.hpp"
#include "support.hpp"

using namespace crtprune;
using testsupport::random_tree;

namespace {

// root -1- a, a -2- b (leaf), a -0.5- c, c -1- d (leaf), c -3- e (leaf)
Tree sample_tree(NodeId& a, NodeId& b, NodeId& c, NodeId& d, NodeId& e) {
  Tree t;
  a = t.add_child(0, 1.0);
  b = t.add_child(a, 2.0);
  c = t.add_child(a, 0.5);
  d = t.add_child(c, 1.0);
  e = t.add_child(c, 3.0);
  return t;
}

std::vector<double> sorted_depths(const Tree& t) {
  auto d = t.depths();
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace

TEST_SUITE("tree") {
  TEST_CASE("basic quantities") {
    NodeId a, b, c, d, e;
    Tree t = sample_tree(a, b, c, d, e);
    CHECK(t.size() == 6);
    CHECK(leaf_count(t) == 3);
    CHECK(t.total_length() == doctest::Approx(7.5));
    CHECK(t.height() == doctest::Approx(4.5));
    CHECK(t.depths()[d] == doctest::Approx(2.5));
    CHECK(t.degree(c) == 2);
    std::vector<NodeId> kids;
    for (NodeId k : t.children(c)) kids.push_back(k);
    CHECK(kids == std::vector<NodeId>{d, e});
    auto ls = leaves(t);
    std::sort(ls.begin(), ls.end());
    CHECK(ls == std::vector<NodeId>{b, d, e});
    CHECK(leaves_at_level(t, 0.0) == 1);
    CHECK(leaves_at_level(t, 0.5) == 1);
    CHECK(leaves_at_level(t, 1.2) == 2);
    CHECK(leaves_at_level(t, 2.0) == 3);
    CHECK(leaves_at_level(t, 3.5) == 1);
    CHECK(leaves_at_level(t, 5.0) == 0);
  }

  TEST_CASE("restriction by hand") {
    NodeId a, b, c, d, e;
    Tree t = sample_tree(a, b, c, d, e);
    Tree r = restrict_to(t, 2.0);
    CHECK(leaf_count(r) == 0);
    CHECK(truncation_count(r) == 3);
    CHECK(r.total_length() == doctest::Approx(1.0 + 1.0 + 0.5 + 0.5 + 0.5));
    Tree r2 = restrict_to(t, 1.5);
    CHECK(truncation_count(r2) == 2);
    Tree all = restrict_to(t, 10.0);
    CHECK(isometric(all, t));
  }

  TEST_CASE("integral of level counts equals total length") {
    for (std::uint64_t s = 1; s <= 50; ++s) {
      Tree t = random_tree(s, 7);
      auto br = sorted_depths(t);
      double integral =
          testsupport::integrate_steps(br, [&](double x) { return double(leaves_at_level(t, x)); });
      CHECK(std::fabs(integral - t.total_length()) < 1e-9 * t.total_length());
    }
  }

  TEST_CASE("restriction composes") {
    for (std::uint64_t s = 1; s <= 50; ++s) {
      Tree t = random_tree(s, 7, 0.2);
      double h = t.height();
      for (double fa : {0.3, 0.6, 0.9})
        for (double fb : {0.25, 0.75}) {
          double x = fa * h, y = fb * h;
          Tree two = restrict_to(restrict_to(t, x), y);
          Tree one = restrict_to(t, std::min(x, y));
          CHECK(isometric(two, one));
          CHECK(truncation_count(one) >= leaves_at_level(t, std::min(x, y)));
        }
    }
  }

  TEST_CASE("restricted length is the integral up to the level") {
    for (std::uint64_t s = 1; s <= 30; ++s) {
      Tree t = random_tree(s, 7);
      double a = 0.55 * t.height();
      auto br = sorted_depths(t);
      br.erase(std::remove_if(br.begin(), br.end(), [&](double x) { return x > a; }), br.end());
      br.push_back(a);
      double integral =
          testsupport::integrate_steps(br, [&](double x) { return double(leaves_at_level(t, x)); });
      CHECK(restrict_to(t, a).total_length() == doctest::Approx(integral).epsilon(1e-9));
    }
  }

  TEST_CASE("span") {
    NodeId a, b, c, d, e;
    Tree t = sample_tree(a, b, c, d, e);
    Tree sb = span(t, {b});
    CHECK(sb.size() == 2);
    CHECK(sb.length(1) == doctest::Approx(3.0));
    Tree sde = span(t, {d, e});
    CHECK(sde.size() == 4);
    CHECK(sde.total_length() == doctest::Approx(1.5 + 1.0 + 3.0));
    CHECK(isometric(span(t, {b, d, e}), t));
    CHECK_THROWS_AS(span(t, {}), EmptySpanError);
    CHECK_THROWS_AS(span(t, {c}), PositionError);
  }

  TEST_CASE("span is idempotent and keeps leaf distances") {
    for (std::uint64_t s = 1; s <= 60; ++s) {
      Tree t = random_tree(s, 7);
      auto ls = leaves(t);
      Rng rng(s * 7919);
      std::vector<NodeId> pick;
      for (NodeId v : ls)
        if (rng.bernoulli(0.5)) pick.push_back(v);
      if (pick.empty()) pick.push_back(ls.front());
      std::vector<NodeId> ids;
      Tree once = span(t, pick, ids);
      Tree twice = span(once, leaves(once));
      CHECK(isometric(once, twice));
      CHECK(leaf_count(once) == pick.size());
      auto d0 = t.depths(), d1 = once.depths();
      for (NodeId v : pick) {
        REQUIRE(ids[v] != kNoNode);
        CHECK(d1[ids[v]] == doctest::Approx(d0[v]));
      }
      for (NodeId v = 1; v < once.size(); ++v) CHECK(once.degree(v) != 1);
    }
  }

  TEST_CASE("graft") {
    NodeId a, b, c, d, e;
    Tree t = sample_tree(a, b, c, d, e);
    Tree bush;
    NodeId x = bush.add_child(0, 0.25);
    bush.add_child(x, 1.0);
    bush.add_child(x, 1.0);
    Tree g = graft(t, {{TreePoint{b, 0.5}, bush}, {TreePoint{e, 3.0}, bush}, {TreePoint{0, 0.0}, bush}});
    CHECK(g.total_length() == doctest::Approx(t.total_length() + 3 * 2.25));
    CHECK(leaf_count(g) == 3 - 1 + 6);
    CHECK(g.degree(0) == 2);
    CHECK_THROWS_AS(graft(t, {{TreePoint{b, 2.5}, bush}}), PositionError);
    CHECK_THROWS_AS(graft(t, {{TreePoint{99, 0.0}, bush}}), PositionError);
  }

  TEST_CASE("isometry") {
    Tree p, q;
    NodeId pa = p.add_child(0, 1.0);
    p.add_child(pa, 1.0);
    p.add_child(pa, 2.0);
    NodeId qa = q.add_child(0, 1.0);
    q.add_child(qa, 2.0);
    q.add_child(qa, 1.0);
    CHECK(isometric(p, q));
    q.set_length(2, 2.5);
    CHECK_FALSE(isometric(p, q));
    q.set_length(2, 2.0);
    q.set_truncated(3, true);
    CHECK_FALSE(isometric(p, q));
    for (std::uint64_t s = 1; s <= 20; ++s) {
      Tree t = random_tree(s, 6, 0.3);
      auto order = canonical_child_order(t);
      // rebuild with children in canonical order: same tree up to isometry
      Tree u;
      std::vector<std::pair<NodeId, NodeId>> stack{{0, 0}};
      while (!stack.empty()) {
        auto [old, now] = stack.back();
        stack.pop_back();
        for (auto it = order[old].rbegin(); it != order[old].rend(); ++it)
          stack.push_back({*it, u.add_child(now, t.length(*it), t.truncated(*it))});
      }
      CHECK(isometric(t, u));
    }
  }
}
