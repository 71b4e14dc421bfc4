#include "crtprune/report.hpp"

#include <cmath>

#include <json.hpp>

namespace crtprune {

namespace {

nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

std::string to_json(const std::vector<Report>& reports, std::uint64_t seed, bool with_timing) {
  nlohmann::ordered_json out;
  out["seed"] = seed;
  bool all = true;
  auto list = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["check"] = r.check;
    j["seed"] = r.seed;
    j["n"] = r.n;
    j["statistic"] = r.statistic;
    j["observed"] = number(r.observed);
    j["reference"] = number(r.reference);
    if (r.se) j["se"] = number(*r.se);
    if (r.p_value) j["p_value"] = number(*r.p_value);
    j["tolerance"] = number(r.tolerance);
    j["verdict"] = r.pass ? "pass" : "fail";
    if (!r.note.empty()) j["note"] = r.note;
    if (with_timing && r.wall_ms) j["wall_ms"] = *r.wall_ms;
    list.push_back(std::move(j));
    all = all && r.pass;
  }
  out["reports"] = std::move(list);
  out["verdict"] = all ? "pass" : "fail";
  return out.dump(2) + "\n";
}

}  // namespace crtprune
