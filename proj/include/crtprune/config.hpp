#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crtprune/gw.hpp"
#include "crtprune/mechanism.hpp"

namespace crtprune {

struct Tolerances {
  double root_find = 1e-12;
  double fixed_point = 1e-12;
  double tail = 1e-12;
};

struct Config {
  double alpha = 0.0;
  double beta = 1.0;
  double stable_c = 0.0;
  double stable_gamma = 1.5;
  std::vector<Atom> atoms;
  double lambda = 1.0;
  double theta = 1.0;
  double q = 0.5;
  std::size_t replicates = 0;  // 0: each check uses its own default sample size
  Caps caps;
  Tolerances tol;
  std::uint64_t seed = 20240917;
  std::string experiment = "all";

  Mechanism mechanism() const;
};

// Flat "key = value" lines; '#' starts a comment. Keys:
//   mechanism.alpha mechanism.beta mechanism.stable_c mechanism.stable_gamma
//   mechanism.atoms = [[r, m], ...]
//   lambda theta q replicates seed experiment
//   caps.max_nodes caps.max_depth tolerances.root_find tolerances.fixed_point tolerances.tail
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

}  // namespace crtprune
