#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "crtprune/config.hpp"
#include "crtprune/errors.hpp"
#include "crtprune/experiments.hpp"
#include "crtprune/hypothesis.hpp"
#include "crtprune/report.hpp"
#include "crtprune/rng.hpp"

using namespace crtprune;

namespace {

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return std::size_t(-1);
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config defaults and keys") {
    Config d = parse_config("");
    CHECK(d.lambda == 1.0);
    CHECK(d.experiment == "all");
    CHECK(d.replicates == 0);
    Config c = parse_config(
        "# comment\n"
        "mechanism.alpha = 0.5\n"
        "mechanism.beta = 2   # trailing\n"
        "mechanism.atoms = [[1.0, 0.5], [2, 0.25]]\n"
        "\n"
        "lambda = 3\n"
        "theta = 1.5\n"
        "q = -0.1\n"
        "replicates = 77\n"
        "seed = 12\n"
        "experiment = E4\n"
        "caps.max_nodes = 500\n"
        "tolerances.tail = 1e-9\n");
    CHECK(c.alpha == 0.5);
    CHECK(c.beta == 2.0);
    REQUIRE(c.atoms.size() == 2);
    CHECK(c.atoms[1].r == 2.0);
    CHECK(c.atoms[1].m == 0.25);
    CHECK(c.lambda == 3.0);
    CHECK(c.q == -0.1);
    CHECK(c.replicates == 77);
    CHECK(c.seed == 12);
    CHECK(c.experiment == "E4");
    CHECK(c.caps.max_nodes == 500);
    CHECK(c.tol.tail == 1e-9);
    Mechanism m = c.mechanism();
    CHECK(m(1.0) == doctest::Approx(0.5 + 2.0 + 0.5 * (std::exp(-1.0) - 1 + 1.0) +
                                    0.25 * (std::exp(-2.0) - 1 + 2.0)));
  }

  TEST_CASE("config errors carry the line") {
    CHECK(error_line("lambda = 1\nbogus = 2\n") == 2);
    CHECK(error_line("lambda = 1\n\nlambda = 2\n") == 3);
    CHECK(error_line("lambda\n") == 1);
    CHECK(error_line("# x\nlambda = abc\n") == 2);
    CHECK(error_line("lambda = -1\n") == 1);
    CHECK(error_line("lambda = inf\n") == 1);
    CHECK(error_line("replicates = -3\n") == 1);
    CHECK(error_line("mechanism.atoms = [[1, -1]]\n") == 1);
    CHECK(error_line("mechanism.atoms = [1, 2\n") == 1);
    CHECK(error_line("mechanism.stable_gamma = 2.5\n") == 1);
    CHECK(error_line("tolerances.tail = 0.1\n") == 1);
    // cross-field: reported at the later of the keys involved
    CHECK(error_line("theta = 0.2\nlambda = 1\nq = 0.4\n") == 3);
    CHECK(error_line("q = -2\n") == 1);
    CHECK(error_line("mechanism.beta = 0\n") == 1);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg"), ConfigError);
  }

  TEST_CASE("unknown experiment") {
    Config c = parse_config("");
    CHECK_THROWS_AS(run_experiment("E9", c, 1), ConfigError);
    CHECK_THROWS_AS(run_experiments("e1", c, 1), ConfigError);
    CHECK(experiment_ids().size() == 8);
  }

  TEST_CASE("reports are deterministic") {
    Config c = parse_config("");
    auto a = run_experiment("E1", c, 5);
    auto b = run_experiment("E1", c, 5);
    CHECK(to_json(a, 5, false) == to_json(b, 5, false));
    CHECK(to_json(a, 5, false).find("wall_ms") == std::string::npos);
    CHECK(to_json(a, 5, true).find("wall_ms") != std::string::npos);
    for (const auto& r : a) {
      CHECK(r.experiment == "E1");
      CHECK(r.pass);
    }
  }

  TEST_CASE("report json layout") {
    Report ok;
    ok.experiment = "E0";
    ok.check = "x";
    ok.observed = INFINITY;
    ok.reference = NAN;
    ok.tolerance = -INFINITY;
    ok.pass = true;
    auto j = nlohmann::json::parse(to_json({ok}, 3, false));
    CHECK(j["seed"] == 3);
    CHECK(j["verdict"] == "pass");
    CHECK(j["reports"][0]["observed"] == "inf");
    CHECK(j["reports"][0]["reference"] == "nan");
    CHECK(j["reports"][0]["tolerance"] == "-inf");
    CHECK_FALSE(j["reports"][0].contains("se"));
    Report bad = ok;
    bad.pass = false;
    bad.se = 0.5;
    auto k = nlohmann::json::parse(to_json({ok, bad}, 3, false));
    CHECK(k["verdict"] == "fail");
    CHECK(k["reports"][1]["verdict"] == "fail");
    CHECK(k["reports"][1]["se"] == 0.5);
  }

  TEST_CASE("kolmogorov tail") {
    CHECK(kolmogorov_q(0.0) == doctest::Approx(1.0));
    // tabulated critical values
    CHECK(kolmogorov_q(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_q(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(kolmogorov_q(1.9495) == doctest::Approx(0.001).epsilon(1e-2));
    double prev = 1.0;
    for (double x = 0.1; x < 3.0; x += 0.1) {
      double q = kolmogorov_q(x);
      CHECK(q <= prev);
      prev = q;
    }
  }

  TEST_CASE("chi2 survival") {
    CHECK(chi2_survival(2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(chi2_survival(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  }

  TEST_CASE("tests accept the null and reject shifts") {
    std::vector<double> x, y, z;
    std::vector<std::uint64_t> a, b, c;
    Rng rng(99);
    for (int i = 0; i < 20'000; ++i) {
      x.push_back(rng.uniform());
      y.push_back(rng.uniform());
      z.push_back(rng.uniform() * 1.05);
      a.push_back(rng.poisson(2.0));
      b.push_back(rng.poisson(2.0));
      c.push_back(rng.poisson(2.2));
    }
    auto unif = [](double t) { return std::clamp(t, 0.0, 1.0); };
    CHECK(ks_one_sample(x, unif).p_value > 1e-3);
    CHECK(ks_one_sample(z, unif).p_value < 1e-6);
    CHECK(ks_two_sample(x, y).p_value > 1e-3);
    CHECK(ks_two_sample(x, z).p_value < 1e-6);
    CHECK(chi2_two_sample(a, b).p_value > 1e-3);
    CHECK(chi2_two_sample(a, c).p_value < 1e-6);
    std::vector<double> pois;
    for (int k = 0; k < 15; ++k) pois.push_back(std::exp(-2.0) * std::pow(2.0, k) / std::tgamma(k + 1.0));
    CHECK(chi2_goodness(a, pois).p_value > 1e-3);
    CHECK(chi2_goodness(c, pois).p_value < 1e-6);
    MeanSe m = mean_se({1.0, 2.0, 3.0});
    CHECK(m.mean == 2.0);
    CHECK(m.se == doctest::Approx(1.0 / std::sqrt(3.0)));
  }

  TEST_CASE("derived streams") {
    CHECK(Rng::stream(1, 2).bits() == Rng::stream(1, 2).bits());
    CHECK(Rng::stream(1, 2).bits() != Rng::stream(1, 3).bits());
    CHECK(Rng::stream(1, 2).bits() != Rng::stream(2, 2).bits());
  }
}
