// Acceptance gate: one line per criterion, nonzero exit when any fail.
// Tolerances are pinned here; the monte carlo criteria share one 12-cell
// suite run at 100000 replications.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "eiv/canonical.hpp"
#include "eiv/errors.hpp"
#include "eiv/estimators.hpp"
#include "eiv/exact_moments.hpp"
#include "eiv/mc.hpp"

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("%s %2d. %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

eiv::SufficientStats stats_from(double ls_value, double u_sq, double s, int p,
                                int m) {
  eiv::SufficientStats st;
  st.u_sq = u_sq;
  st.t_uz = ls_value * u_sq;
  st.z_sq = 2.0 * ls_value * ls_value * u_sq + 1.0;
  st.s = s;
  st.p = p;
  st.m = m;
  st.r = 2;
  st.validate();
  return st;
}

// ---- 1. published slope arithmetic ----------------------------------------
void criterion_1() {
  const eiv::SufficientStats st = stats_from(0.23972, 706.41, 1421.5, 10, 11);
  const double br1 = eiv::br(st, 1);
  const double mm = eiv::mm(st);
  const bool pass =
      std::fabs(br1 - 0.59055) <= 5e-5 && std::fabs(mm - (-0.28904)) <= 5e-5;
  report(1, pass, "corrected-slope arithmetic on published statistics",
         "br1 " + num(br1) + " vs 0.59055, mm " + num(mm) + " vs -0.28904");
}

// ---- 2. internal consistency of a published table --------------------------
void criterion_2() {
  const int p = 24, m = 25;
  const double ls_v = 0.47693, mm_v = 0.53151;
  const double s_over_usq = (1.0 - ls_v / mm_v) * m / p;
  const eiv::SufficientStats st = stats_from(ls_v, 1.0, s_over_usq, p, m);
  const double br1 = eiv::br(st, 1);
  const double br2 = eiv::br(st, 2);
  const bool pass =
      std::fabs(br1 - 0.52183) <= 1e-4 && std::fabs(br2 - 0.52587) <= 1e-3;
  report(2, pass, "series corrections recovered from published ls and mm",
         "br1 " + num(br1) + " vs 0.52183, br2 " + num(br2) + " vs 0.52587");
}

// ---- 3. exact series vs the published table --------------------------------
void criterion_3() {
  eiv::exact::MixtureParams mp;
  mp.p = 99;
  mp.m = 100;
  mp.lambda = 247.5;
  const double bias_ls = eiv::exact::bias_ls_exact(mp, -5.0);
  const double bias_br1 = eiv::exact::bias_br_exact(mp, 1, -5.0);
  const double mse_ls = eiv::exact::mse_ls_exact(mp, -5.0, 10.0, 1.0);
  const bool pass = bias_ls >= 0.81 && bias_ls <= 0.83 && bias_br1 >= 0.12 &&
                    bias_br1 <= 0.14 && mse_ls >= 0.67 && mse_ls <= 0.77;
  report(3, pass, "exact series lands in the published windows",
         "ls bias " + num(bias_ls) + ", br1 bias " + num(bias_br1) +
             ", ls mse " + num(mse_ls));
}

// ---- 4/5/6. monte carlo suite ----------------------------------------------
struct CellExact {
  double bias_ls, mse_ls, bias_br1, mse_br1;
};

CellExact exact_for(const eiv::mc::SimConfig& cfg) {
  eiv::exact::MixtureParams mp;
  mp.p = cfg.p();
  mp.m = cfg.m();
  mp.lambda = cfg.lambda();
  CellExact e;
  e.bias_ls = eiv::exact::bias_ls_exact(mp, cfg.beta);
  e.mse_ls = eiv::exact::mse_ls_exact(mp, cfg.beta, cfg.tau2, cfg.sigma2);
  e.bias_br1 = eiv::exact::bias_br_exact(mp, 1, cfg.beta);
  e.mse_br1 = eiv::exact::mse_phi_exact(
      mp, eiv::PhiPolySpec::br(1, mp.p, mp.m), cfg.beta, cfg.tau2, cfg.sigma2);
  return e;
}

const eiv::mc::EstimatorRow& row_of(const eiv::mc::SimResult& res,
                                    const std::string& id) {
  for (const eiv::mc::EstimatorRow& row : res.rows)
    if (row.id == id) return row;
  throw eiv::Error("acceptance: estimator row '" + id + "' missing");
}

void criterion_4(const std::vector<eiv::mc::SimResult>& suite) {
  double max_z = 0.0;
  std::string worst;
  for (const eiv::mc::SimResult& res : suite) {
    const CellExact e = exact_for(res.config);
    const struct {
      const char* id;
      double mc_bias, se_bias, mc_mse, se_mse, ex_bias, ex_mse;
    } rows[2] = {
        {"ls", row_of(res, "ls").bias, row_of(res, "ls").se_bias,
         row_of(res, "ls").mse, row_of(res, "ls").se_mse, e.bias_ls, e.mse_ls},
        {"br1", row_of(res, "br1").bias, row_of(res, "br1").se_bias,
         row_of(res, "br1").mse, row_of(res, "br1").se_mse, e.bias_br1,
         e.mse_br1},
    };
    for (const auto& r : rows) {
      const double zb = std::fabs(r.mc_bias - r.ex_bias) / r.se_bias;
      const double zm = std::fabs(r.mc_mse - r.ex_mse) / r.se_mse;
      for (double z : {zb, zm})
        if (z > max_z) {
          max_z = z;
          worst = std::string(r.id) + " at lambda=" + num(res.lambda);
        }
    }
  }
  report(4, max_z <= 3.0,
         "monte carlo matches exact ls/br1 moments in all 12 cells",
         "max |z| " + num(max_z) + " at " + worst);
}

void criterion_5(const std::vector<eiv::mc::SimResult>& suite) {
  const eiv::mc::SimResult* cell = nullptr;
  for (const eiv::mc::SimResult& res : suite)
    if (res.config.n == 30 && res.config.sigma2 == 1.0 &&
        std::fabs(res.lambda - 72.5) < 1e-9)
      cell = &res;
  if (!cell) {
    report(5, false, "published spot cell present", "cell not found");
    return;
  }
  struct Spot {
    const char* id;
    double bias, mse;
  };
  const std::vector<Spot> spots = {
      {"ls", 0.79, 0.78}, {"br1", 0.12, 0.33}, {"br5", 0.00, 0.39}};
  bool pass = true;
  std::string detail;
  for (const Spot& sp : spots) {
    const eiv::mc::EstimatorRow& row = row_of(*cell, sp.id);
    // The published values come from an independent run with five times the
    // replications, rounded to two decimals.
    const double tol_b = 3.0 * std::sqrt(row.se_bias * row.se_bias * 1.2) + 0.005;
    const double tol_m = 3.0 * std::sqrt(row.se_mse * row.se_mse * 1.2) + 0.005;
    pass = pass && std::fabs(row.bias - sp.bias) <= tol_b &&
           std::fabs(row.mse - sp.mse) <= tol_m;
    detail += std::string(sp.id) + " " + num(row.bias) + "/" + num(row.mse) + " ";
  }
  report(5, pass, "published spot cell reproduced at desk scale",
         detail + "vs 0.79/0.78, 0.12/0.33, 0.00/0.39");
}

void criterion_6(const std::vector<eiv::mc::SimResult>& suite) {
  bool pass = true;
  std::string fail_note;

  const std::vector<std::pair<int, int>> grids = {{9, 10}, {29, 30}, {99, 100}};
  for (const auto& pm : grids) {
    const int p = pm.first, m = pm.second;
    const std::vector<std::pair<eiv::PsiSpec, eiv::PsiSpec>> cases = {
        {eiv::PsiSpec::tls(p, m), eiv::PsiSpec::identity()},
        {eiv::PsiSpec::tbr(1, p, m), eiv::PsiSpec::br_bar(1, p, m)},
        {eiv::PsiSpec::tbr(2, p, m), eiv::PsiSpec::br_bar(2, p, m)},
        {eiv::PsiSpec::tgg(p, m), eiv::PsiSpec::gg_bar(p, m)},
        {eiv::PsiSpec::kr([p, m](double v) { return eiv::PsiSpec::gg_bar(p, m)(v); },
                          p, m),
         eiv::PsiSpec::gg_bar(p, m)},
    };
    for (const auto& c : cases) {
      const eiv::exact::DominationReport rep = eiv::exact::verify_domination(
          [&c](double v) { return c.first(v); },
          [&c](double v) { return c.second(v); }, p, m);
      if (!rep.pass()) {
        pass = false;
        fail_note = c.first.name() + " p=" + std::to_string(p);
      }
    }
  }

  double max_excess = -1e300;
  for (const eiv::mc::SimCell& cell : eiv::mc::table3_lambdas()) {
    eiv::exact::MixtureParams mp;
    mp.p = cell.n - 1;
    mp.m = cell.n;
    mp.lambda = cell.lambda;
    const eiv::PsiSpec tls = eiv::PsiSpec::tls(mp.p, mp.m);
    const double diff =
        eiv::exact::mse_psi_exact([&tls](double v) { return tls(v); }, mp,
                                  -5.0, 10.0, cell.sigma2) -
        eiv::exact::mse_ls_exact(mp, -5.0, 10.0, cell.sigma2);
    max_excess = std::max(max_excess, diff);
  }
  if (max_excess > 1e-9) {
    pass = false;
    fail_note += " tls exceeds ls";
  }

  // Paired draws share random numbers, so on cells where the truncation never
  // binds the two estimators agree analytically and the paired differences
  // are rounding residue; an absolute floor keeps that from masquerading as a
  // statistically significant violation.
  double worst_pair = -1e300;
  for (const eiv::mc::SimResult& res : suite) {
    const eiv::mc::PairRow& pr = res.pairs.at(0);
    worst_pair = std::max(worst_pair, pr.mse_diff - 3.0 * pr.se_diff);
  }
  if (worst_pair > 1e-12) {
    pass = false;
    fail_note += " paired tgg/gg";
  }

  report(6, pass, "mse domination: grids, exact truncation, paired suite",
         pass ? "exact tls-ls excess " + num(max_excess) +
                    ", worst paired margin " + num(worst_pair)
              : fail_note);
}

// ---- 7. bias reduction ------------------------------------------------------
void criterion_7() {
  bool pass = true;
  std::string note;

  for (int p : {10, 30, 100}) {
    for (double lambda : {0.045, 2.25, 72.5}) {
      eiv::exact::MixtureParams mp;
      mp.p = p;
      mp.m = p + 1;
      mp.lambda = lambda;
      const int ell_max = std::min(5, (p - 3) / 2);
      double prev = std::fabs(eiv::exact::bias_br_exact(mp, 0, -5.0));
      for (int ell = 1; ell <= ell_max; ++ell) {
        const double cur = std::fabs(eiv::exact::bias_br_exact(mp, ell, -5.0));
        if (!(cur < prev)) {
          pass = false;
          note = "chain broken at p=" + std::to_string(p) +
                 " lambda=" + num(lambda) + " ell=" + std::to_string(ell);
        }
        prev = cur;
      }
    }
  }

  eiv::exact::MixtureParams mp;
  mp.p = 10;
  mp.m = 11;
  mp.lambda = 2.0;
  const int p = mp.p, m = mp.m;

  const struct {
    const char* name;
    eiv::PhiPolySpec phi;
  } cands[] = {
      {"br1", eiv::PhiPolySpec::br(1, p, m)},
      {"st1", eiv::PhiPolySpec::stefanski(1, p, m)},
      {"brd1", eiv::PhiPolySpec::br_doubled(1, p, m)},
  };
  for (const auto& c : cands) {
    const eiv::exact::EnvelopeReport rep = eiv::exact::bias_envelope_verify(
        [&c](double t) { return c.phi(t); }, mp, 1);
    if (!(rep.envelope_ok && rep.bias_reduced)) {
      pass = false;
      note += std::string(" envelope failed for ") + c.name;
    }
  }
  const bool st_cond =
      double(p) / m <= 2.0 * eiv::br_a(1, p) / eiv::br_b(1, m);
  if (!st_cond) {
    pass = false;
    note += " st admissibility condition";
  }

  report(7, pass, "bias chains fall and order-1 envelopes verify",
         pass ? "chains at p in {10,30,100}, three envelopes, st condition"
              : note);
}

// ---- 8. identity suite ------------------------------------------------------
void criterion_8() {
  bool pass = true;
  std::string note;

  const double lambda = 2.5;
  const int pp = 7;
  eiv::exact::SeriesControl ctl;
  const auto g = [pp](long long k) { return 1.0 / (pp + 2.0 * k); };
  const double lhs =
      lambda * eiv::exact::poisson_expectation(g, lambda, ctl, 1.0 / pp);
  const double rhs = eiv::exact::poisson_expectation(
      [&g](long long k) { return k == 0 ? 0.0 : k * g(k - 1); }, lambda, ctl,
      0.5);
  if (std::fabs(lhs - rhs) > 1e-10) {
    pass = false;
    note += " shift identity";
  }

  eiv::exact::MixtureParams mp;
  mp.p = 10;
  mp.m = 11;
  mp.lambda = 2.0;
  eiv::PhiPolySpec inv;
  inv.terms = {{1, 1.0}};
  for (long long k : {0LL, 3LL}) {
    const auto a = eiv::exact::lemma_integrals_poly(mp, inv, k);
    const auto b = eiv::exact::lemma_integrals_quad(
        mp, [](double t) { return 1.0 / t; }, k);
    if (std::fabs(a.i1 - b.i1) > 1e-8 || std::fabs(a.i2 - b.i2) > 1e-8) {
      pass = false;
      note += " conditional integrals";
    }
  }

  eiv::exact::MixtureParams mid;
  mid.p = 9;
  mid.m = 10;
  mid.lambda = 4.5;
  const auto ids = eiv::exact::moment_identities(mid, {});
  const double excess =
      eiv::exact::control_excess([](double) { return 1.0; }, mid);
  if (std::fabs(excess - (ids.e2 - 2.0 * ids.e1)) > 1e-8) {
    pass = false;
    note += " unit-multiplier assembly";
  }

  std::mt19937_64 gen(424242);
  std::normal_distribution<double> ny(10.0, 4.0), nx(5.0, 3.0);
  double max_norm = 0.0, max_ls = 0.0;
  for (int s = 0; s < 1000; ++s) {
    eiv::RepeatedMeasuresSample sample;
    sample.n = 6;
    sample.r = 3;
    sample.y.resize(6);
    sample.x.resize(18);
    for (int i = 0; i < 6; ++i) {
      sample.y[i] = ny(gen);
      for (int j = 0; j < 3; ++j) sample.x[i * 3 + j] = nx(gen);
    }
    const eiv::CanonicalStats cs = eiv::canonicalize(sample);
    double ysq = 0.0, xbsq = 0.0, ybar = 0.0, xbb = 0.0;
    std::vector<double> xbar(6, 0.0);
    for (int i = 0; i < 6; ++i) {
      ysq += sample.y[i] * sample.y[i];
      for (int j = 0; j < 3; ++j) xbar[i] += sample.x[i * 3 + j] / 3.0;
      xbsq += xbar[i] * xbar[i];
      ybar += sample.y[i] / 6.0;
      xbb += xbar[i] / 6.0;
    }
    double zsq = cs.z0 * cs.z0, usq = cs.u0 * cs.u0;
    for (double v : cs.z) zsq += v * v;
    for (double v : cs.u) usq += v * v;
    max_norm = std::max(max_norm, std::fabs(zsq - ysq) / ysq);
    max_norm = std::max(max_norm, std::fabs(usq - xbsq) / xbsq);
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 6; ++i) {
      sxy += (xbar[i] - xbb) * (sample.y[i] - ybar);
      sxx += (xbar[i] - xbb) * (xbar[i] - xbb);
    }
    max_ls = std::max(max_ls, std::fabs(eiv::ls(eiv::sufficient_stats(cs)) -
                                        sxy / sxx) /
                                  std::fabs(sxy / sxx));
  }
  if (max_norm > 1e-12 || max_ls > 1e-10) {
    pass = false;
    note += " canonical invariants";
  }

  report(8, pass, "shift identity, quadrature closed forms, rotation invariants",
         pass ? "all identity checks within pinned tolerances" : note);
}

// ---- 9. ordering ------------------------------------------------------------
void criterion_9() {
  eiv::mc::SimConfig cfg;
  cfg.n = 10;
  cfg.xi.value = 1.0;
  cfg.seed = 5;
  int violations = 0, evaluated = 0;
  for (int i = 0; i < 10000; ++i) {
    const eiv::SufficientStats st =
        eiv::sufficient_stats(eiv::mc::sample_canonical(cfg, i));
    double v_ls, v_ml, v_ir;
    try {
      v_ls = eiv::ls(st);
      v_ml = eiv::ml(st);
      v_ir = eiv::ir(st);
    } catch (const eiv::Error&) {
      continue;
    }
    ++evaluated;
    if (st.t_uz > 0.0) {
      if (!(0.0 < v_ls && v_ls < v_ml && v_ml < v_ir)) ++violations;
    } else if (st.t_uz < 0.0) {
      if (!(v_ir < v_ml && v_ml < v_ls && v_ls < 0.0)) ++violations;
    }
  }
  report(9, violations == 0 && evaluated == 10000,
         "ls/ml/inverse ordering on both signs of u'z",
         std::to_string(evaluated) + " draws, " + std::to_string(violations) +
             " violations");
}

// ---- 10. determinism through the cli ---------------------------------------
std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void criterion_10() {
  const std::string cfg_path = "acceptance_sim.json";
  std::ofstream(cfg_path)
      << R"({"n": 10, "estimators": ["ls", "br1", "tgg"], "reps": 4000, "seed": 77})";
  const std::string base = std::string(EIV_CLI_BIN) +
                           " simulate --config " + cfg_path + " --out ";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"", "acc_a.csv"},
      {"", "acc_b.csv"},
      {"EIVREG_WORKERS=1 ", "acc_c.csv"},
      {"EIVREG_WORKERS=4 ", "acc_d.csv"},
  };
  bool pass = true;
  for (const auto& r : runs)
    if (std::system((r.first + base + r.second + " 2>/dev/null").c_str()) != 0)
      pass = false;
  const std::string ref = slurp("acc_a.csv");
  pass = pass && !ref.empty();
  for (const char* f : {"acc_b.csv", "acc_c.csv", "acc_d.csv"})
    pass = pass && slurp(f) == ref;
  for (const char* f :
       {"acceptance_sim.json", "acc_a.csv", "acc_b.csv", "acc_c.csv",
        "acc_d.csv"})
    std::remove(f);
  report(10, pass, "simulation output byte-identical across runs and workers",
         pass ? "4 runs compared" : "outputs differ or a run failed");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();

  const std::vector<eiv::mc::SimResult> suite =
      eiv::mc::table4_suite(100000, 3);
  criterion_4(suite);
  criterion_5(suite);
  criterion_6(suite);

  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();

  if (g_failures) std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
