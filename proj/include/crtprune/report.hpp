#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crtprune {

struct Report {
  std::string experiment;
  std::string check;
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::string statistic;
  double observed = 0.0;
  double reference = 0.0;
  std::optional<double> se;
  std::optional<double> p_value;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
  std::optional<double> wall_ms;  // only emitted on request; breaks byte-identity
};

std::string to_json(const std::vector<Report>& reports, std::uint64_t seed, bool with_timing);

}  // namespace crtprune
