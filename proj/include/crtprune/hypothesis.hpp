#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace crtprune {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(const std::vector<double>& x);

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
  int df = 0;
};

// Two-sample chi-square homogeneity test on integer-valued samples. Tail bins
// are pooled until every bin holds at least `min_count` combined observations.
TestResult chi2_two_sample(const std::vector<std::uint64_t>& x, const std::vector<std::uint64_t>& y,
                           std::size_t min_count = 10);

// Goodness of fit of integer samples against probabilities probs[k] = P(X = k);
// values past the end of probs form the last bin.
TestResult chi2_goodness(const std::vector<std::uint64_t>& x, const std::vector<double>& probs,
                         double min_expected = 10.0);

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_q(double lambda);

TestResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> x, std::vector<double> y);

double chi2_survival(double statistic, int df);

}  // namespace crtprune
