#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "eiv/canonical.hpp"
#include "eiv/errors.hpp"
#include "eiv/fixture.hpp"
#include "eiv/mc.hpp"
#include "eiv/sim_io.hpp"

using namespace eiv;
using namespace eiv::mc;

TEST_CASE("config json round trip covers every field") {
  const std::string text = R"({
    "n": 30, "r": 3, "beta": -2.5, "alpha": 1.0, "theta": 0.25,
    "tau2": 4.0, "sigma2": 2.0, "xi": 0.5,
    "estimators": ["ls", "br1"], "pairs": [["br1", "ls"]],
    "bayes": {"c1": 2.0, "c2": 3.0},
    "reps": 5000, "seed": 42, "level": "raw"
  })";
  const SimConfig cfg = parse_sim_config(text);
  CHECK(cfg.n == 30);
  CHECK(cfg.r == 3);
  CHECK(cfg.beta == -2.5);
  CHECK(cfg.alpha == 1.0);
  CHECK(cfg.theta == 0.25);
  CHECK(cfg.tau2 == 4.0);
  CHECK(cfg.sigma2 == 2.0);
  CHECK(cfg.xi.mode == XiSpec::Mode::constant_fill);
  CHECK(cfg.xi.value == 0.5);
  REQUIRE(cfg.estimators.size() == 2);
  CHECK(cfg.estimators[1] == "br1");
  REQUIRE(cfg.pairs.size() == 1);
  CHECK(cfg.pairs[0].first == "br1");
  CHECK(cfg.bayes.c1 == 2.0);
  CHECK(cfg.bayes.c2 == 3.0);
  CHECK(cfg.reps == 5000);
  CHECK(cfg.seed == 42);
  CHECK(cfg.level == SimConfig::Level::raw);
}

TEST_CASE("config defaults and explicit xi") {
  const SimConfig cfg = parse_sim_config(R"({"n": 4, "xi": [1.0, 2.0, 2.0]})");
  CHECK(cfg.r == 2);
  CHECK(cfg.beta == -5.0);
  CHECK(cfg.tau2 == 10.0);
  CHECK(cfg.sigma2 == 1.0);
  CHECK(cfg.reps == 100000);
  CHECK(cfg.level == SimConfig::Level::canonical);
  CHECK(cfg.xi.mode == XiSpec::Mode::explicit_vector);
  CHECK(cfg.lambda() == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("config rejects malformed documents") {
  CHECK_THROWS_AS(parse_sim_config("{"), InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config("[1,2]"), InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"reps": 10})"), InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "nn": 3})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "xi": "big"})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "level": "weird"})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "pairs": [["a"]]})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "bayes": {"c3": 1}})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 10, "reps": 2.5})"),
                  InvalidInputError);
  CHECK_THROWS_AS(parse_sim_config(R"({"n": 3, "xi": [1.0]})"),
                  InvalidInputError);
  CHECK_THROWS_AS(load_sim_config("/nonexistent/config.json"),
                  InvalidInputError);
}

TEST_CASE("result tables carry the configuration and lambda") {
  SimConfig cfg;
  cfg.n = 10;
  cfg.reps = 100;
  cfg.seed = 3;
  cfg.xi.value = 1.0;
  cfg.estimators = {"ls", "tls"};
  cfg.pairs = {{"tls", "ls"}};
  const SimResult res = run_study(cfg);

  std::ostringstream csv;
  write_result(csv, res, OutputFormat::csv);
  const std::string text = csv.str();
  CHECK(text.find("# lambda=4.5") != std::string::npos);
  CHECK(text.find("estimator,bias,se_bias,mse,se_mse,failures") !=
        std::string::npos);
  CHECK(text.find("\nls,") != std::string::npos);
  CHECK(text.find("\ntls,") != std::string::npos);
  CHECK(text.find("# pair tls vs ls: mse_diff=") != std::string::npos);
  CHECK(text.find("seed=3") != std::string::npos);

  std::ostringstream tsv;
  write_result(tsv, res, OutputFormat::tsv);
  CHECK(tsv.str().find("estimator\tbias") != std::string::npos);

  std::ostringstream pretty;
  write_result(pretty, res, OutputFormat::pretty);
  CHECK(pretty.str().find("estimator") != std::string::npos);
  CHECK(pretty.str().find("ls") != std::string::npos);
}

TEST_CASE("single-replication tables print na standard errors") {
  SimConfig cfg;
  cfg.n = 10;
  cfg.reps = 1;
  cfg.estimators = {"ls"};
  const SimResult res = run_study(cfg);
  std::ostringstream os;
  write_result(os, res, OutputFormat::csv);
  CHECK(os.str().find(",na,") != std::string::npos);
  CHECK(os.str().find(",na\n") == std::string::npos);  // failures column last
}

TEST_CASE("full precision output round-trips doubles") {
  SimConfig cfg;
  cfg.n = 10;
  cfg.reps = 50;
  cfg.estimators = {"ls"};
  const SimResult res = run_study(cfg);
  std::ostringstream os;
  write_result(os, res, OutputFormat::csv, true);
  const std::string text = os.str();
  const std::size_t row = text.find("\nls,");
  REQUIRE(row != std::string::npos);
  double bias = 0.0;
  std::sscanf(text.c_str() + row, "\nls,%lf", &bias);
  CHECK(bias == res.rows[0].bias);
}

TEST_CASE("format names parse") {
  CHECK(parse_output_format("csv") == OutputFormat::csv);
  CHECK(parse_output_format("tsv") == OutputFormat::tsv);
  CHECK(parse_output_format("pretty") == OutputFormat::pretty);
  CHECK_THROWS_AS(parse_output_format("xml"), InvalidInputError);
}

TEST_CASE("fixtures hit prescribed sufficient statistics") {
  FixtureTargets t;
  t.t_uz = 169.346;
  t.u_sq = 706.41;
  t.z_sq = 120.5;
  t.s = 1421.5;
  t.p = 10;
  t.r = 2;
  t.u0 = 33.0;
  t.z0 = 21.0;
  const RepeatedMeasuresSample sample = make_fixture(t);
  CHECK(sample.n == 11);
  const SufficientStats st = sufficient_from_sample(sample);
  CHECK(st.t_uz == doctest::Approx(t.t_uz).epsilon(1e-10));
  CHECK(st.u_sq == doctest::Approx(t.u_sq).epsilon(1e-10));
  CHECK(st.z_sq == doctest::Approx(t.z_sq).epsilon(1e-10));
  CHECK(st.s == doctest::Approx(t.s).epsilon(1e-10));
  CHECK(st.u0 == doctest::Approx(t.u0).epsilon(1e-10));
  CHECK(st.z0 == doctest::Approx(t.z0).epsilon(1e-10));
  CHECK(st.p == 10);
  CHECK(st.m == 11);
}

TEST_CASE("fixture csv round-trips through the loader") {
  FixtureTargets t;
  t.t_uz = -3.25;
  t.u_sq = 9.0;
  t.z_sq = 4.0;
  t.s = 2.0;
  t.p = 5;
  t.r = 3;
  const RepeatedMeasuresSample sample = make_fixture(t);
  const std::string path = "fixture_roundtrip.csv";
  write_sample_csv(path, sample);
  const RepeatedMeasuresSample loaded = load_csv(path);
  std::remove(path.c_str());
  REQUIRE(loaded.n == sample.n);
  REQUIRE(loaded.r == sample.r);
  for (int i = 0; i < sample.n; ++i) {
    CHECK(loaded.y[i] == sample.y[i]);
    for (int j = 0; j < sample.r; ++j)
      CHECK(loaded.x[i * sample.r + j] == sample.x[i * sample.r + j]);
  }
}

TEST_CASE("fixture targets are validated") {
  FixtureTargets t;
  t.p = 10;
  t.u_sq = 0.0;
  CHECK_THROWS_AS(make_fixture(t), InvalidInputError);
  t.u_sq = 1.0;
  t.t_uz = 10.0;
  t.z_sq = 1.0;
  CHECK_THROWS_AS(make_fixture(t), InvalidInputError);
  t.t_uz = 0.5;
  t.s = 1.0;
  t.r = 1;
  CHECK_THROWS_AS(make_fixture(t), InvalidInputError);
  t.r = 2;
  t.p = 1;
  CHECK_THROWS_AS(make_fixture(t), InvalidInputError);
}
