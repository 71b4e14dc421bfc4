// Runs every acceptance criterion and prints one line per criterion.
#include <sys/wait.h>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "crtprune/config.hpp"
#include "crtprune/experiments.hpp"
#include "crtprune/report.hpp"

using namespace crtprune;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> prefixes;
  double budget_ms;  // 0: no runtime bound
};

const std::vector<Criterion> kCriteria{
    {1, "exact offspring laws", {"offspring.", "landmarks."}, 1'000.0},
    {2, "mean leaves", {"mean_leaves."}, 15'000.0},
    {3, "backward martingale", {"martingale_R."}, 0.0},
    {4, "pruning marginal", {"pruning."}, 0.0},
    {5, "growth consistency", {"growth."}, 0.0},
    {6, "leaf pgf", {"pgf."}, 0.0},
    {7, "ascension law",
     {"ascension.density_constant", "ascension.density_mass", "ascension.endpoint_gap",
      "ascension.uniform_ks", "ascension.extinction", "ascension.compact_fraction"},
     0.0},
    {8, "size-bias and spine", {"spine.", "ascension.tree_leaf_mean"}, 0.0},
    {9, "measure-change weights", {"girsanov.", "qq_girsanov."}, 0.0},
    {10, "lambda direction", {"mart_Q."}, 0.0},
    {11, "metric", {"prohorov.", "ghp."}, 300'000.0},
};

int owner(const std::string& check) {
  for (const auto& c : kCriteria)
    for (const auto& p : c.prefixes)
      if (check.rfind(p, 0) == 0) return c.id;
  return 0;
}

struct Run {
  int status = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  Run r;
  std::string cmd = std::string(CRTPRUNE_CLI) + " " + args;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

void line(int id, bool pass, const std::string& title, const std::string& detail) {
  std::cout << "criterion " << (id < 10 ? " " : "") << id << ": " << (pass ? "PASS" : "FAIL")
            << "  " << title << "  (" << detail << ")\n";
}

}  // namespace

int main() {
  Config cfg = parse_config("");
  auto reports = run_experiments("all", cfg, cfg.seed);

  std::map<int, std::vector<const Report*>> by;
  bool ok = true;
  for (const auto& r : reports) {
    int id = owner(r.check);
    if (id == 0) {
      std::cout << "unassigned check " << r.experiment << "/" << r.check << "\n";
      ok = false;
    }
    by[id].push_back(&r);
  }

  for (const auto& c : kCriteria) {
    const auto& rs = by[c.id];
    bool pass = !rs.empty();
    double ms = 0.0;
    std::string failed;
    for (const Report* r : rs) {
      ms += r->wall_ms.value_or(0.0);
      if (!r->pass) {
        pass = false;
        failed += " " + r->check;
      }
    }
    std::string detail = std::to_string(rs.size()) + " checks, " + std::to_string(ms / 1000.0) + " s";
    if (c.budget_ms > 0 && ms >= c.budget_ms) {
      pass = false;
      detail += " over budget " + std::to_string(c.budget_ms / 1000.0) + " s";
    }
    if (!failed.empty()) detail += "; failed:" + failed;
    line(c.id, pass, c.title, detail);
    ok = ok && pass;
  }

  Run a = run_cli("verify --experiment all --out -");
  Run b = run_cli("verify --experiment all --out -");
  bool same = !a.out.empty() && a.out == b.out;
  bool matches_lib = a.out == to_json(reports, cfg.seed, false);
  bool pass12 = same && matches_lib && a.status == 0 && b.status == 0;
  line(12, pass12, "determinism",
       "exit " + std::to_string(a.status) + "/" + std::to_string(b.status) + ", " +
           std::to_string(a.out.size()) + " bytes, " + (same ? "identical" : "different") +
           (matches_lib ? "" : ", differs from in-process run"));
  ok = ok && pass12;

  return ok ? 0 : 1;
}
