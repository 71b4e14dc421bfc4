#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crtprune/config.hpp"
#include "crtprune/report.hpp"

namespace crtprune {

const std::vector<std::string>& experiment_ids();

// Runs one experiment (E1..E8). Sub-checks that fail or throw are reported as
// failures without stopping the others. Unknown ids raise ConfigError.
std::vector<Report> run_experiment(const std::string& id, const Config& config,
                                   std::uint64_t seed);

// "all" or a single id.
std::vector<Report> run_experiments(const std::string& which, const Config& config,
                                    std::uint64_t seed);

// Largest |difference| of prohorov_atomic against subset enumeration over
// random instances with at most max_atoms atoms per measure.
double prohorov_oracle_gap(std::size_t instances, std::size_t max_atoms, std::uint64_t seed);

}  // namespace crtprune
