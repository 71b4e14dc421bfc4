#include "crtprune/hypothesis.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "crtprune/errors.hpp"

namespace crtprune {

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe out;
  out.n = x.size();
  if (x.empty()) return out;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  out.mean = mean;
  if (x.size() > 1)
    out.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return out;
}

double chi2_survival(double statistic, int df) {
  if (df <= 0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

TestResult chi2_two_sample(const std::vector<std::uint64_t>& x, const std::vector<std::uint64_t>& y,
                           std::size_t min_count) {
  if (x.empty() || y.empty()) throw DomainError("chi-square needs two non-empty samples");
  std::uint64_t top = 0;
  for (auto v : x) top = std::max(top, v);
  for (auto v : y) top = std::max(top, v);
  std::vector<double> a(top + 1, 0.0), b(top + 1, 0.0);
  for (auto v : x) a[v] += 1.0;
  for (auto v : y) b[v] += 1.0;
  // Pool from the top down until each bin is populated enough.
  std::vector<double> pa, pb;
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) {
    ca += a[i];
    cb += b[i];
    if (ca + cb >= static_cast<double>(min_count)) {
      pa.push_back(ca);
      pb.push_back(cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (pa.empty()) {
      pa.push_back(ca);
      pb.push_back(cb);
    } else {
      pa.back() += ca;
      pb.back() += cb;
    }
  }
  double n1 = static_cast<double>(x.size());
  double n2 = static_cast<double>(y.size());
  double k1 = std::sqrt(n2 / n1), k2 = std::sqrt(n1 / n2);
  TestResult r;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    double d = k1 * pa[i] - k2 * pb[i];
    r.statistic += d * d / (pa[i] + pb[i]);
  }
  r.df = static_cast<int>(pa.size()) - 1;
  r.p_value = chi2_survival(r.statistic, r.df);
  return r;
}

TestResult chi2_goodness(const std::vector<std::uint64_t>& x, const std::vector<double>& probs,
                         double min_expected) {
  if (x.empty() || probs.empty()) throw DomainError("chi-square needs data and a law");
  std::size_t k = probs.size();
  std::vector<double> obs(k + 1, 0.0), p(probs);
  double covered = 0.0;
  for (double v : probs) covered += v;
  p.push_back(std::max(0.0, 1.0 - covered));
  for (auto v : x) obs[std::min<std::uint64_t>(v, k)] += 1.0;
  double n = static_cast<double>(x.size());
  std::vector<double> po, pe;
  double co = 0.0, ce = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    co += obs[i];
    ce += p[i] * n;
    if (ce >= min_expected) {
      po.push_back(co);
      pe.push_back(ce);
      co = ce = 0.0;
    }
  }
  if (co > 0.0 || ce > 0.0) {
    if (pe.empty()) {
      po.push_back(co);
      pe.push_back(ce);
    } else {
      po.back() += co;
      pe.back() += ce;
    }
  }
  TestResult r;
  for (std::size_t i = 0; i < po.size(); ++i) {
    if (pe[i] <= 0.0) {
      if (po[i] > 0.0) r.statistic = INFINITY;
      continue;
    }
    r.statistic += (po[i] - pe[i]) * (po[i] - pe[i]) / pe[i];
  }
  r.df = static_cast<int>(po.size()) - 1;
  r.p_value = chi2_survival(r.statistic, r.df);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw DomainError("KS needs data");
  std::sort(x.begin(), x.end());
  double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestResult r;
  r.statistic = d;
  double s = std::sqrt(n);
  r.p_value = kolmogorov_q((s + 0.12 + 0.11 / s) * d);
  return r;
}

TestResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw DomainError("KS needs two samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double n1 = static_cast<double>(x.size());
  double n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  TestResult r;
  r.statistic = d;
  double ne = std::sqrt(n1 * n2 / (n1 + n2));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

}  // namespace crtprune
