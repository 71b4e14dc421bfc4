#pragma once

#include <cstdint>
#include <random>

namespace crtprune {

// 64-bit finalizer from splitmix64.
std::uint64_t mix64(std::uint64_t x);

// Seed of replicate stream `index` derived from a base seed.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng stream(std::uint64_t base, std::uint64_t index) {
    return Rng(stream_seed(base, index));
  }

  std::uint64_t bits() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1).
  double uniform_open();
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double rate);
  double normal();
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace crtprune
