#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "eiv/canonical.hpp"
#include "eiv/errors.hpp"
#include "eiv/estimators.hpp"
#include "eiv/exact_moments.hpp"
#include "eiv/mc.hpp"

using namespace eiv;
using namespace eiv::mc;

namespace {

SimConfig base_config() {
  SimConfig cfg;
  cfg.n = 10;
  cfg.r = 2;
  cfg.beta = -5.0;
  cfg.tau2 = 10.0;
  cfg.sigma2 = 1.0;
  cfg.xi.mode = XiSpec::Mode::constant_fill;
  cfg.xi.value = 1.0;
  cfg.seed = 7;
  return cfg;
}

bool rows_identical(const SimResult& a, const SimResult& b) {
  if (a.rows.size() != b.rows.size() || a.pairs.size() != b.pairs.size())
    return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    if (x.id != y.id || x.bias != y.bias || x.se_bias != y.se_bias ||
        x.mse != y.mse || x.se_mse != y.se_mse || x.failures != y.failures ||
        x.used != y.used)
      return false;
  }
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const auto& x = a.pairs[i];
    const auto& y = b.pairs[i];
    if (x.a != y.a || x.b != y.b || x.mse_diff != y.mse_diff ||
        x.se_diff != y.se_diff || x.used != y.used)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation and derived quantities") {
  SimConfig cfg = base_config();
  CHECK(cfg.p() == 9);
  CHECK(cfg.m() == 10);
  CHECK(cfg.lambda() == doctest::Approx(4.5).epsilon(1e-12));

  cfg.xi.mode = XiSpec::Mode::explicit_vector;
  cfg.xi.values = {3.0, 4.0};
  CHECK_THROWS_AS(cfg.validate(), InvalidInputError);
  cfg.n = 3;
  cfg.validate();
  CHECK(cfg.lambda() == doctest::Approx(12.5).epsilon(1e-12));

  SimConfig bad = base_config();
  bad.n = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = base_config();
  bad.r = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = base_config();
  bad.tau2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = base_config();
  bad.reps = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
}

TEST_CASE("degenerate draws hit the noiseless model exactly") {
  SimConfig cfg = base_config();
  cfg.tau2 = 0.0;
  cfg.sigma2 = 0.0;
  cfg.alpha = 2.0;
  cfg.theta = 1.5;

  const CanonicalStats cs = sample_canonical(cfg, 31);
  CHECK(cs.z0 == std::sqrt(10.0) * 2.0 + cfg.beta * 1.5);
  CHECK(cs.u0 == 1.5);
  CHECK(cs.s == 0.0);
  for (int i = 0; i < cfg.p(); ++i) {
    CHECK(cs.u[i] == 1.0);
    CHECK(cs.z[i] == cfg.beta);
  }

  const RepeatedMeasuresSample raw = sample_raw(cfg, 31);
  const std::vector<double> q = helmert_q(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    double gi = q[i] * cfg.theta;
    for (int k = 1; k < cfg.n; ++k) gi += q[k * cfg.n + i] * 1.0;
    for (int j = 0; j < cfg.r; ++j) CHECK(raw.x[i * cfg.r + j] == gi);
    CHECK(raw.y[i] == cfg.alpha + cfg.beta * gi);
  }
}

TEST_CASE("canonical draws match first moments of the rotated model") {
  SimConfig cfg = base_config();
  cfg.reps = 200000;
  const double xisq = 9.0;
  const double p = cfg.p();
  const double m = cfg.m();
  const double beta = cfg.beta;
  const double sigma2 = cfg.sigma2;

  std::vector<std::pair<std::string, EstimatorFn>> probes = {
      {"usq", [&](const SufficientStats& st) {
         return st.u_sq - (p * sigma2 + xisq) + beta;
       }},
      {"s", [&](const SufficientStats& st) { return st.s - m * sigma2 + beta; }},
      {"tuz", [&](const SufficientStats& st) {
         return st.t_uz - beta * xisq + beta;
       }},
      {"zsq", [&](const SufficientStats& st) {
         return st.z_sq - (p * cfg.tau2 + beta * beta * xisq) + beta;
       }},
  };
  const SimResult res = run_study_custom(cfg, probes);
  for (const EstimatorRow& row : res.rows) {
    INFO(row.id);
    CHECK(row.failures == 0);
    CHECK(row.used == cfg.reps);
    CHECK(std::fabs(row.bias) <= 4.0 * row.se_bias);
  }
}

TEST_CASE("raw-level pipeline reproduces the canonical laws") {
  SimConfig cfg = base_config();
  cfg.r = 3;
  cfg.level = SimConfig::Level::raw;
  cfg.reps = 100000;
  cfg.theta = 0.7;
  cfg.alpha = -1.0;
  const double xisq = 9.0;
  const double p = cfg.p();
  const double m = cfg.m();
  const double beta = cfg.beta;

  std::vector<std::pair<std::string, EstimatorFn>> probes = {
      {"usq", [&](const SufficientStats& st) {
         return st.u_sq - (p * cfg.sigma2 + xisq) + beta;
       }},
      {"s", [&](const SufficientStats& st) {
         return st.s - m * cfg.sigma2 + beta;
       }},
      {"tuz", [&](const SufficientStats& st) {
         return st.t_uz - beta * xisq + beta;
       }},
      {"u0", [&](const SufficientStats& st) {
         return st.u0 - cfg.theta + beta;
       }},
      {"z0", [&](const SufficientStats& st) {
         return st.z0 - (std::sqrt(10.0) * cfg.alpha + beta * cfg.theta) + beta;
       }},
  };
  const SimResult res = run_study_custom(cfg, probes);
  for (const EstimatorRow& row : res.rows) {
    INFO(row.id);
    CHECK(row.failures == 0);
    CHECK(std::fabs(row.bias) <= 4.0 * row.se_bias);
  }
}

TEST_CASE("constant estimator gives exact zero bias and mse") {
  SimConfig cfg = base_config();
  cfg.reps = 5000;
  const SimResult res = run_study_custom(
      cfg, {{"const", [&](const SufficientStats&) { return cfg.beta; }}});
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].bias == 0.0);
  CHECK(res.rows[0].mse == 0.0);
  CHECK(res.rows[0].se_bias == 0.0);
  CHECK(res.rows[0].se_mse == 0.0);
  CHECK(res.rows[0].failures == 0);
  CHECK(res.rows[0].used == cfg.reps);
}

TEST_CASE("single replication reports NaN standard errors") {
  SimConfig cfg = base_config();
  cfg.reps = 1;
  cfg.estimators = {"ls"};
  const SimResult res = run_study(cfg);
  CHECK(res.rows[0].used == 1);
  CHECK(std::isnan(res.rows[0].se_bias));
  CHECK(std::isnan(res.rows[0].se_mse));
}

TEST_CASE("results are bit-identical across runs and worker counts") {
  SimConfig cfg = base_config();
  cfg.reps = 10000;
  cfg.estimators = {"ls", "tls", "br1"};
  cfg.pairs = {{"tls", "ls"}};

  setenv("EIVREG_WORKERS", "1", 1);
  const SimResult one = run_study(cfg);
  const SimResult one_again = run_study(cfg);
  setenv("EIVREG_WORKERS", "4", 1);
  const SimResult four = run_study(cfg);
  unsetenv("EIVREG_WORKERS");
  const SimResult def = run_study(cfg);

  CHECK(rows_identical(one, one_again));
  CHECK(rows_identical(one, four));
  CHECK(rows_identical(one, def));
}

TEST_CASE("distinct streams give distinct draws") {
  const SimConfig cfg = base_config();
  const CanonicalStats a = sample_canonical(cfg, 0);
  const CanonicalStats b = sample_canonical(cfg, 1);
  CHECK(a.z[0] != b.z[0]);
  CHECK(a.s != b.s);
}

TEST_CASE("failures are counted, excluded, and replayable") {
  SimConfig cfg = base_config();
  cfg.reps = 4096 + 1000;
  const EstimatorFn ls = make_estimator(parse_estimator_id("ls"));
  const EstimatorFn flaky = [&](const SufficientStats& st) {
    const double v = ls(st);
    if (v > -4.0) throw SingularEstimateError("flaky");
    return v;
  };
  const SimResult res = run_study_custom(cfg, {{"flaky", flaky}, {"ls", ls}});
  REQUIRE(res.rows.size() == 2);
  const EstimatorRow& row = res.rows[0];
  CHECK(row.used + row.failures == cfg.reps);
  CHECK(res.rows[1].failures == 0);

  long long failures = 0, used = 0;
  double sum = 0.0, sum2 = 0.0;
  for (long long i = 0; i < cfg.reps; ++i) {
    const SufficientStats st = sufficient_stats(sample_canonical(cfg, i));
    const double v = ls(st);
    if (v > -4.0) {
      ++failures;
      continue;
    }
    const double d = v - cfg.beta;
    sum += d;
    sum2 += d * d;
    ++used;
  }
  CHECK(failures > 0);
  CHECK(row.failures == failures);
  CHECK(row.used == used);
  CHECK(row.bias == doctest::Approx(sum / used).epsilon(1e-12));
  CHECK(row.mse == doctest::Approx(sum2 / used).epsilon(1e-12));
}

TEST_CASE("non-finite estimates count as failures") {
  SimConfig cfg = base_config();
  cfg.reps = 100;
  const SimResult res = run_study_custom(
      cfg, {{"nan", [](const SufficientStats& st) {
              return st.t_uz > 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : st.t_uz;
            }}});
  CHECK(res.rows[0].failures > 0);
  CHECK(res.rows[0].used + res.rows[0].failures == cfg.reps);
}

TEST_CASE("all replications failing raises an error") {
  SimConfig cfg = base_config();
  cfg.reps = 64;
  CHECK_THROWS_AS(
      run_study_custom(cfg, {{"always", [](const SufficientStats&) -> double {
                               throw SingularEstimateError("always");
                             }}}),
      Error);
}

TEST_CASE("estimator and pair lists are checked up front") {
  SimConfig cfg = base_config();
  cfg.reps = 10;
  CHECK_THROWS_AS(run_study(cfg), InvalidInputError);
  cfg.estimators = {"not-an-estimator"};
  CHECK_THROWS_AS(run_study(cfg), InvalidInputError);
  cfg.estimators = {"ls"};
  cfg.pairs = {{"ls", "tls"}};
  CHECK_THROWS_AS(run_study(cfg), InvalidInputError);
}

TEST_CASE("simulation cell catalogue") {
  const std::vector<SimCell> cells = table3_lambdas();
  REQUIRE(cells.size() == 12);
  CHECK(cells[0].lambda == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(cells[1].lambda == doctest::Approx(1.45).epsilon(1e-12));
  CHECK(cells[3].lambda == doctest::Approx(0.045).epsilon(1e-12));
  CHECK(cells[8].lambda == doctest::Approx(247.5).epsilon(1e-12));
  CHECK(cells[9].lambda == doctest::Approx(2.25).epsilon(1e-12));
  for (const SimCell& c : cells) {
    CHECK(c.lambda ==
          doctest::Approx((c.n - 1) * c.sigma_xi2 / (2.0 * c.sigma2))
              .epsilon(1e-12));
  }
}

TEST_CASE("suite runner covers the 12 cells with the published catalogue") {
  const std::vector<SimResult> suite = table4_suite(256, 99);
  REQUIRE(suite.size() == 12);
  for (const SimResult& res : suite) {
    const bool small = res.config.n == 10;
    CHECK(res.rows.size() == (small ? 6u : 8u));
    if (!small) {
      CHECK(res.rows[4].id == "br5");
      CHECK(res.rows[5].id == "tbr5");
    }
    REQUIRE(res.pairs.size() == 1);
    CHECK(res.pairs[0].a == "tgg");
    CHECK(res.pairs[0].b == "gg");
    for (const EstimatorRow& row : res.rows) {
      CHECK(row.used + row.failures == res.config.reps);
      CHECK(row.mse + 1e-12 >= row.bias * row.bias);
      if (row.id == "ls") CHECK(row.failures == 0);
    }
  }
}

TEST_CASE("paired comparison matches the marginal mse difference") {
  SimConfig cfg = base_config();
  cfg.reps = 20000;
  cfg.estimators = {"tgg", "gg"};
  cfg.pairs = {{"tgg", "gg"}};
  const SimResult res = run_study(cfg);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.rows[0].failures == 0);
  CHECK(res.rows[1].failures == 0);
  CHECK(res.pairs[0].used == cfg.reps);
  CHECK(res.pairs[0].mse_diff ==
        doctest::Approx(res.rows[0].mse - res.rows[1].mse).epsilon(1e-10));
  CHECK(res.pairs[0].se_diff > 0.0);
}

TEST_CASE("monte carlo agrees with exact slope moments") {
  SimConfig cfg = base_config();
  cfg.n = 30;
  cfg.sigma2 = 1.0;
  cfg.xi.value = std::sqrt(5.0);
  cfg.reps = 100000;
  cfg.seed = 11;
  cfg.estimators = {"ls", "br1"};
  const SimResult res = run_study(cfg);

  exact::MixtureParams mp;
  mp.p = cfg.p();
  mp.m = cfg.m();
  mp.lambda = cfg.lambda();
  CHECK(mp.lambda == doctest::Approx(72.5).epsilon(1e-12));

  const double bias_ls = exact::bias_ls_exact(mp, cfg.beta);
  const double mse_ls =
      exact::mse_ls_exact(mp, cfg.beta, cfg.tau2, cfg.sigma2);
  const double bias_br = exact::bias_br_exact(mp, 1, cfg.beta);

  const EstimatorRow& ls = res.rows[0];
  const EstimatorRow& br = res.rows[1];
  CHECK(std::fabs(ls.bias - bias_ls) <= 4.0 * ls.se_bias);
  CHECK(std::fabs(ls.mse - mse_ls) <= 4.0 * ls.se_mse);
  CHECK(std::fabs(br.bias - bias_br) <= 4.0 * br.se_bias);

  CHECK(ls.bias == doctest::Approx(0.79).epsilon(0.03));
  CHECK(ls.mse == doctest::Approx(0.78).epsilon(0.05));
}
