#include "crtprune/rng.hpp"

#include <cmath>

namespace crtprune {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

double Rng::uniform_open() {
  for (;;) {
    double u = uniform();
    if (u > 0.0) return u;
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t threshold = -n % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::exponential(double rate) { return -std::log(uniform_open()) / rate; }

double Rng::normal() {
  // Marsaglia polar method; the second variate is discarded to keep streams stateless.
  for (;;) {
    double x = 2.0 * uniform() - 1.0;
    double y = 2.0 * uniform() - 1.0;
    double s = x * x + y * y;
    if (s > 0.0 && s < 1.0) return x * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    double limit = std::exp(-mean);
    double prod = uniform_open();
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= uniform_open();
      ++k;
    }
    return k;
  }
  // Split large means into independent halves until each is small.
  double half = mean / 2.0;
  return poisson(half) + poisson(mean - half);
}

}  // namespace crtprune
