#pragma once

#include <vector>

#include "crtprune/mechanism.hpp"
#include "crtprune/tree.hpp"

namespace crtprune {

struct PgfSolve {
  double zeta = 0.0;
  double value = 0.0;
  double residual = 0.0;
  long iterations = 0;
};

// E[L_theta] = psi_theta(eta) / (eta psi'(theta)), +inf when psi'(theta) <= 0.
double mean_leaves(const Mechanism& m, double lam, double theta);

struct LeafMoments {
  double mean = 0.0;
  double second = 0.0;  // E[L^2]
};
// Moments of the leaf count of G(psi_theta, psi_theta(eta)) from the offspring
// pgf: E L = g(0)/(1 - g'(1)), E L^2 = (g(0) + g''(1) (E L)^2)/(1 - g'(1)).
LeafMoments leaf_moments(const Mechanism& m, double lam, double theta);
// h_theta(zeta): the root in [0,1] of x = g_theta(x) + g_theta(0)(zeta - 1).
PgfSolve leaf_pgf(const Mechanism& m, double lam, double theta, double zeta);

// E[zeta^{L_theta} z^{L_q}] = h_theta(zeta w(z)), w(z) = g(h_q(z)) + g(0)(z - 1)
// with g the growth pgf from theta back to q.
double joint_leaf_pgf(const Mechanism& m, double lam, double q, double theta, double zeta,
                      double z);

double martingale_R(const Tree& t, const Mechanism& m, double lam, double theta);

// (eta/(eta - q0))^{L(a,t) - 1} for a super-critical mechanism.
double girsanov_weight(const Tree& t, const Mechanism& m, double lam, double a);

// Likelihood ratio of the restricted tree at q against the one at theta.
double qq_girsanov_weight(const Tree& t, const Mechanism& m, double lam, double theta, double q,
                          double a);

// (eta_z/(eta_z - q0))^{L(a, span of leaves with time <= z)}; leaf_times is indexed by node.
double mart_Q(const Tree& t, const std::vector<double>& leaf_times, double z, double a,
              const Mechanism& m);

}  // namespace crtprune
