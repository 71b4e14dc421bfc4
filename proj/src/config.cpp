#include "crtprune/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crtprune/errors.hpp"

namespace crtprune {

Mechanism Config::mechanism() const {
  std::optional<StablePart> stable;
  if (stable_c > 0.0) stable = StablePart{stable_c, stable_gamma};
  return Mechanism(alpha, beta, stable, atoms);
}

namespace {

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(std::string_view v, std::size_t line) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(line, "expected a finite number, got '" + std::string(v) + "'");
  return x;
}

std::uint64_t to_count(std::string_view v, std::size_t line) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(line, "expected a non-negative integer, got '" + std::string(v) + "'");
  return x;
}

std::vector<Atom> to_atoms(std::string_view v, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(v);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(line, std::string("atoms: ") + e.what());
  }
  if (!j.is_array()) throw ConfigError(line, "atoms must be a list of [r, m] pairs");
  std::vector<Atom> out;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
      throw ConfigError(line, "atoms must be a list of [r, m] pairs");
    Atom atom{a[0].get<double>(), a[1].get<double>()};
    if (!(atom.r > 0.0) || !(atom.m > 0.0))
      throw ConfigError(line, "atom location and mass must be positive");
    out.push_back(atom);
  }
  return out;
}

void positive(double x, std::size_t line, const char* what) {
  if (!(x > 0.0)) throw ConfigError(line, std::string(what) + " must be positive");
}

}  // namespace

Config parse_config(std::string_view text) {
  Config c;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
    std::string key(trim(raw.substr(0, eq)));
    std::string_view val = trim(raw.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (val.empty()) throw ConfigError(line_no, "missing value for " + key);
    if (seen.count(key)) throw ConfigError(line_no, "duplicate key " + key);
    seen[key] = line_no;

    if (key == "mechanism.alpha") {
      c.alpha = to_real(val, line_no);
    } else if (key == "mechanism.beta") {
      c.beta = to_real(val, line_no);
      if (c.beta < 0.0) throw ConfigError(line_no, "beta must be non-negative");
    } else if (key == "mechanism.stable_c") {
      c.stable_c = to_real(val, line_no);
      if (c.stable_c < 0.0) throw ConfigError(line_no, "stable_c must be non-negative");
    } else if (key == "mechanism.stable_gamma") {
      c.stable_gamma = to_real(val, line_no);
      if (!(c.stable_gamma > 1.0 && c.stable_gamma < 2.0))
        throw ConfigError(line_no, "stable_gamma must lie in (1, 2)");
    } else if (key == "mechanism.atoms") {
      c.atoms = to_atoms(val, line_no);
    } else if (key == "lambda") {
      c.lambda = to_real(val, line_no);
      positive(c.lambda, line_no, "lambda");
    } else if (key == "theta") {
      c.theta = to_real(val, line_no);
    } else if (key == "q") {
      c.q = to_real(val, line_no);
    } else if (key == "replicates") {
      c.replicates = to_count(val, line_no);
    } else if (key == "seed") {
      c.seed = to_count(val, line_no);
    } else if (key == "experiment") {
      c.experiment = std::string(val);
    } else if (key == "caps.max_nodes") {
      c.caps.max_nodes = to_count(val, line_no);
      if (c.caps.max_nodes == 0) throw ConfigError(line_no, "max_nodes must be positive");
    } else if (key == "caps.max_depth") {
      c.caps.max_depth = to_count(val, line_no);
      if (c.caps.max_depth == 0) throw ConfigError(line_no, "max_depth must be positive");
    } else if (key == "tolerances.root_find") {
      c.tol.root_find = to_real(val, line_no);
      positive(c.tol.root_find, line_no, "root_find tolerance");
    } else if (key == "tolerances.fixed_point") {
      c.tol.fixed_point = to_real(val, line_no);
      positive(c.tol.fixed_point, line_no, "fixed_point tolerance");
    } else if (key == "tolerances.tail") {
      c.tol.tail = to_real(val, line_no);
      if (!(c.tol.tail > 0.0 && c.tol.tail <= 1e-6))
        throw ConfigError(line_no, "tail tolerance must lie in (0, 1e-6]");
    } else {
      throw ConfigError(line_no, "unknown key " + key);
    }
  }

  auto where = [&](std::initializer_list<const char*> keys) {
    std::size_t l = 0;
    for (const char* k : keys)
      if (auto it = seen.find(k); it != seen.end()) l = std::max(l, it->second);
    return l;
  };
  if (!(c.beta > 0.0) && !(c.stable_c > 0.0))
    throw ConfigError(where({"mechanism.beta", "mechanism.stable_c"}),
                      "mechanism needs beta > 0 or a stable part");
  Mechanism m = [&] {
    try {
      return c.mechanism();
    } catch (const Error& e) {
      throw ConfigError(where({"mechanism.alpha", "mechanism.beta", "mechanism.stable_c",
                               "mechanism.stable_gamma", "mechanism.atoms"}),
                        e.what());
    }
  }();
  if (!m.in_domain(c.theta))
    throw ConfigError(where({"theta"}), "theta outside the mechanism domain");
  if (!m.in_domain(c.q)) throw ConfigError(where({"q"}), "q outside the mechanism domain");
  double lower = theta_lambda(m, c.lambda);
  if (!(c.q > lower))
    throw ConfigError(where({"q", "lambda"}), "q must exceed theta_lambda");
  if (!(c.theta > c.q)) throw ConfigError(where({"theta", "q"}), "theta must exceed q");
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace crtprune
