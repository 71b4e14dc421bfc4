#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "crtprune/ascension.hpp"
#include "crtprune/config.hpp"
#include "crtprune/dynamics.hpp"
#include "crtprune/errors.hpp"
#include "crtprune/experiments.hpp"
#include "crtprune/gw.hpp"
#include "crtprune/metric.hpp"
#include "crtprune/newick.hpp"
#include "crtprune/report.hpp"

using namespace crtprune;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::optional<std::size_t> replicates;
};

Config load(const Common& c) {
  Config cfg = c.config_path.empty() ? parse_config("") : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.replicates) cfg.replicates = *c.replicates;
  return cfg;
}

void emit(const Common& c, const std::string& text) {
  if (c.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw Error("cannot write " + c.out);
  f << text;
}

std::size_t count_of(const Config& cfg) { return cfg.replicates ? cfg.replicates : 1; }

json mechanism_json(const Config& cfg) {
  json m;
  m["alpha"] = cfg.alpha;
  m["beta"] = cfg.beta;
  if (cfg.stable_c > 0) {
    m["stable_c"] = cfg.stable_c;
    m["stable_gamma"] = cfg.stable_gamma;
  }
  json atoms = json::array();
  for (const auto& a : cfg.atoms) atoms.push_back({a.r, a.m});
  m["atoms"] = atoms;
  return m;
}

json law_json(const OffspringLaw& law, std::size_t shown) {
  json j;
  std::vector<double> head(law.probs.begin(),
                           law.probs.begin() + std::min(shown, law.probs.size()));
  j["probs"] = head;
  j["support"] = law.probs.size();
  j["tail_mass"] = law.tail_mass;
  j["mean"] = law.mean;
  return j;
}

json tree_or_cap(const Sampled<Tree>& t) {
  if (is_exceeded(t)) {
    const auto& e = std::get<Exceeded>(t);
    return json{{"exceeded", {{"nodes", e.nodes}, {"depth", e.depth}}}};
  }
  return serialize_tree(std::get<Tree>(t));
}

int cmd_law(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  double eta = invert(m, cfg.lambda);
  Landmarks lm = landmarks(m);
  json j;
  j["mechanism"] = mechanism_json(cfg);
  j["lambda"] = cfg.lambda;
  j["eta"] = eta;
  j["criticality"] = to_string(lm.criticality);
  if (lm.theta_star) j["theta_star"] = *lm.theta_star;
  j["q0"] = lm.q0;
  j["theta_lambda"] = theta_lambda(m, cfg.lambda);
  j["offspring"] = law_json(offspring_law(m, cfg.lambda, cfg.tol.tail), 32);
  Mechanism mt = m.shifted(cfg.theta);
  j["theta"] = cfg.theta;
  j["offspring_theta"] = law_json(offspring_law(mt, mt(eta), cfg.tol.tail), 32);
  j["growth_q"] = cfg.q;
  j["growth_law"] = law_json(growth_offspring_law(m, cfg.lambda, cfg.q, cfg.theta, cfg.tol.tail), 32);
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_sample(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  double eta = invert(m, cfg.lambda);
  Mechanism mt = m.shifted(cfg.theta);
  GwSampler gw(mt, mt(eta), cfg.tol.tail);
  json j;
  j["theta"] = cfg.theta;
  j["leaf_mass"] = 1.0 / mt(eta);
  json trees = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    trees.push_back(tree_or_cap(gw.sample(rng, cfg.caps)));
  }
  j["trees"] = trees;
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_prune(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  if (!(cfg.theta > 0)) throw ConfigError(0, "prune needs theta > 0");
  GwSampler gw(m, cfg.lambda, cfg.tol.tail);
  std::vector<double> grid;
  for (int k = 0; k <= 4; ++k) grid.push_back(cfg.theta * k / 4.0);
  json runs = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    auto t = gw.sample(rng, cfg.caps);
    if (is_exceeded(t)) {
      runs.push_back(tree_or_cap(t));
      continue;
    }
    MarkedTree mt = mark_tree(std::get<Tree>(t), m, cfg.lambda, cfg.theta, rng);
    json path = json::array();
    auto traj = prune_trajectory(mt, grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
      path.push_back({{"theta", grid[k]}, {"leaves", leaf_count(traj[k])}, {"tree", serialize_tree(traj[k])}});
    runs.push_back(path);
  }
  emit(c, json{{"grid", grid}, {"runs", runs}}.dump(2) + "\n");
  return 0;
}

int cmd_grow(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  double eta = invert(m, cfg.lambda);
  Mechanism mt = m.shifted(cfg.theta);
  GwSampler start(mt, mt(eta), cfg.tol.tail);
  GrowSampler grow(m, cfg.lambda, cfg.q, cfg.theta, cfg.tol.tail);
  json runs = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    auto t = start.sample(rng, cfg.caps);
    if (is_exceeded(t)) {
      runs.push_back(tree_or_cap(t));
      continue;
    }
    auto g = grow.grow(std::get<Tree>(t), rng, cfg.caps);
    runs.push_back({{"theta", cfg.theta}, {"tree", tree_or_cap(t)}, {"q", cfg.q}, {"grown", tree_or_cap(g)}});
  }
  emit(c, json{{"runs", runs}}.dump(2) + "\n");
  return 0;
}

int cmd_ascension(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  if (!(cfg.theta > 0)) throw ConfigError(0, "ascension continuation needs theta > 0");
  json runs = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    auto s = sample_ascension_tree(m, cfg.lambda, rng, cfg.caps);
    if (is_exceeded(s)) {
      const auto& e = std::get<Exceeded>(s);
      runs.push_back(json{{"exceeded", {{"nodes", e.nodes}, {"depth", e.depth}}}});
      continue;
    }
    const auto& a = std::get<AscensionSample>(s);
    // Forward continuation: the pruning mark law reused on the spine tree.
    Mechanism ms = m.shifted(a.shift);
    MarkedTree marks = mark_tree(a.tree.tree, ms, ms(a.eta), cfg.theta, rng);
    json cont = json::array();
    for (int k = 0; k <= 4; ++k) {
      double z = cfg.theta * k / 4.0;
      Tree p = prune_at(marks, z);
      cont.push_back({{"pruned_by", z}, {"leaves", leaf_count(p)}, {"tree", serialize_tree(p)}});
    }
    runs.push_back({{"time", a.time}, {"shift", a.shift}, {"spine_nodes", a.tree.spine.size()},
                    {"leaves", leaf_count(a.tree.tree)}, {"tree", serialize_tree(a.tree.tree)},
                    {"continuation", {{"conjectural", true}, {"steps", cont}}}});
  }
  emit(c, json{{"runs", runs}}.dump(2) + "\n");
  return 0;
}

int cmd_spine(const Common& c) {
  Config cfg = load(c);
  Mechanism m = cfg.mechanism();
  SpineSampler sp(m, cfg.lambda, cfg.theta, cfg.tol.tail);
  json runs = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    auto s = sp.sample(rng, cfg.caps);
    if (is_exceeded(s)) {
      const auto& e = std::get<Exceeded>(s);
      runs.push_back(json{{"exceeded", {{"nodes", e.nodes}, {"depth", e.depth}}}});
      continue;
    }
    const auto& st = std::get<SpineTree>(s);
    runs.push_back({{"spine_nodes", st.spine.size()}, {"leaves", leaf_count(st.tree)},
                    {"tree", serialize_tree(st.tree)}});
  }
  emit(c, json{{"stop_probability", sp.stop_probability()}, {"runs", runs}}.dump(2) + "\n");
  return 0;
}

int cmd_ghp(const Common& c) {
  Config cfg = load(c);
  const std::vector<double> lams{5.0, 20.0, 80.0, 320.0};
  json runs = json::array();
  for (std::size_t i = 0; i < count_of(cfg); ++i) {
    Rng rng = Rng::stream(cfg.seed, i);
    ExcursionSample ex = sample_excursion_subtrees(20'000, lams, rng, true);
    json row = json::array();
    for (std::size_t k = 0; k + 1 < lams.size(); ++k) {
      double up = ghp_nested_upper(ex.host, ex.subtrees[k + 1], ex.subtrees[k], ex.measures[k + 1],
                                   ex.measures[k]);
      row.push_back({{"lambda", lams[k]}, {"outer", lams[k + 1]}, {"ghp_upper", up},
                     {"leaves", ex.measures[k].points.size()}});
    }
    runs.push_back(row);
  }
  emit(c, json{{"n_steps", 20'000}, {"runs", runs}}.dump(2) + "\n");
  return 0;
}

int cmd_verify(const Common& c, const std::string& experiment, bool timing) {
  Config cfg = load(c);
  std::string which = experiment.empty() ? cfg.experiment : experiment;
  auto reports = run_experiments(which, cfg, cfg.seed);
  emit(c, to_json(reports, cfg.seed, timing));
  for (const auto& r : reports)
    if (!r.pass) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galton-Watson sub-trees of Levy trees: samplers, pruning and checks"};
  app.require_subcommand(1);
  Common common;
  std::string experiment;
  bool timing = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "key = value configuration file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "base seed (overrides the config)");
    sub->add_option("--out", common.out, "output file, - for standard output");
    sub->add_option("--replicates", common.replicates, "sample count (overrides the config)");
  };
  std::vector<std::pair<CLI::App*, std::function<int()>>> cmds;
  auto plain = [&](const char* name, const char* help, int (*fn)(const Common&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    cmds.push_back({sub, [fn, &common] { return fn(common); }});
  };
  plain("law", "offspring and growth laws for the configured mechanism", cmd_law);
  plain("sample", "sample G(psi_theta, psi_theta(eta)) trees", cmd_sample);
  plain("prune", "pruning trajectories of sampled trees", cmd_prune);
  plain("grow", "growth from theta back to q", cmd_grow);
  plain("ascension", "ascension time, tree at ascension and a conjectural pruning continuation",
        cmd_ascension);
  plain("spine", "spine trees at theta", cmd_spine);
  plain("ghp", "nested GHP bounds along the excursion coupling", cmd_ghp);
  CLI::App* verify = app.add_subcommand("verify", "run the experiment suite");
  add_common(verify);
  verify->add_option("--experiment", experiment, "E1..E8 or all");
  verify->add_flag("--timing", timing, "include wall times (output is then not reproducible)");
  cmds.push_back({verify, [&] { return cmd_verify(common, experiment, timing); }});

  CLI11_PARSE(app, argc, argv);
  try {
    for (auto& [sub, fn] : cmds)
      if (sub->parsed()) return fn();
  } catch (const std::exception& e) {
    std::cerr << "crtprune: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
