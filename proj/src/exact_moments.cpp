#include "eiv/exact_moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eiv/errors.hpp"

namespace eiv::exact {

namespace {

[[noreturn]] void fail_window(const std::string& what) {
  throw ValidityWindowError(what);
}

// ---------------------------------------------------------------------------
// Poisson series engine.
//
// Terms are accumulated in k order with the pmf advanced by the recurrence
// P(k+1) = P(k) lambda/(k+1) in log space. Two stopping rules:
//   * certified: a caller-supplied bound on the remaining sum drops below tol;
//   * empirical: past max(2 lambda, lambda + 10 sqrt(lambda)) + 20 the pmf
//     ratio is < 1/2, so three consecutive terms below tol/4 bound the tail
//     for any summand of sub-geometric growth.
// ---------------------------------------------------------------------------

double sum_poisson_series(
    double lambda, const SeriesControl& ctl,
    const std::function<double(long long)>& term,
    const std::function<double(long long, double, double)>& tail_bound) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidInputError("poisson series: lambda must be finite and >= 0");
  if (ctl.abs_tol <= 0.0)
    throw InvalidInputError("poisson series: abs_tol must be > 0");

  const double loglam = lambda > 0.0 ? std::log(lambda) : 0.0;
  const long long bulge = static_cast<long long>(
      std::max(2.0 * lambda, lambda + 10.0 * std::sqrt(lambda)) + 20.0);
  double acc = 0.0;
  double logp = -lambda;
  double cdf = 0.0;
  int small_run = 0;

  for (long long k = 0; k < ctl.max_terms; ++k) {
    const double pk = std::exp(logp);
    const double tk = term(k);
    acc += tk * pk;
    cdf += pk;
    // Past the bulge the pmf ratio is < 1/2, so the remaining mass is at
    // most pk; this also rescues 1 - cdf from its floating-point floor.
    double tail = std::max(0.0, 1.0 - cdf);
    if (k > bulge) tail = std::min(tail, pk);

    if (tail_bound) {
      if (tail_bound(k, pk, tail) < ctl.abs_tol) return acc;
    } else {
      small_run = (std::abs(tk) * pk < 0.25 * ctl.abs_tol) ? small_run + 1 : 0;
      if (k > bulge && small_run >= 3) return acc;
    }
    if (lambda == 0.0) return acc;
    logp += loglam - std::log(static_cast<double>(k + 1));
  }
  throw ConvergenceError("poisson series did not converge within max_terms");
}

double sum_poisson_series(double lambda, const SeriesControl& ctl,
                          const std::function<double(long long)>& term,
                          double sup_bound) {
  if (sup_bound > 0.0) {
    return sum_poisson_series(lambda, ctl, term,
                              [sup_bound](long long, double, double tail) {
                                return sup_bound * tail;
                              });
  }
  return sum_poisson_series(lambda, ctl, term,
                            std::function<double(long long, double, double)>{});
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature over mixture densities.
//
// Integrands are presented as h(v, 1-v) so both endpoint neighbourhoods keep
// full precision. The unit interval is split at a coarse grid merged with
// density-quantile knots (sharply concentrated weights are seeded near their
// mass); the two boundary panels run under v = u^2 (resp. 1 - v = u^2)
// substitutions, which absorb the weight's endpoint power singularities. The
// first two subdivision levels are forced to guard against a vanishing
// three-point starting estimate.
// ---------------------------------------------------------------------------

using Integrand01 = std::function<double(double v, double omv)>;

double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                            double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth,
                            int level) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_rule(a, fa, m, fm, flm);
  const double right = simpson_rule(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0) {
    if (std::abs(delta) > 15.0 * tol)
      throw ConvergenceError("quadrature: max subdivision depth reached");
    return left + right + delta / 15.0;
  }
  if (level >= 2 && std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol,
                              depth - 1, level + 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol,
                              depth - 1, level + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = simpson_rule(a, fa, b, fb, fm);
  return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth, 0);
}

std::vector<double> unit_knots(const std::vector<double>& extra) {
  std::vector<double> knots = {0.0,   0.125, 0.25,  0.375, 0.5,
                               0.625, 0.75,  0.875, 1.0};
  for (double x : extra)
    if (x > 1e-8 && x < 1.0 - 1e-8) knots.push_back(x);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return b - a < 1e-7; }),
              knots.end());
  if (knots.back() < 1.0) knots.push_back(1.0);
  return knots;
}

double integrate_unit(const Integrand01& h, const std::vector<double>& extra,
                      const QuadratureControl& qctl) {
  const std::vector<double> knots = unit_knots(extra);
  const double panel_tol = qctl.abs_tol / static_cast<double>(knots.size());
  double total = 0.0;

  {  // left boundary panel under v = u^2
    const double v1 = knots[1];
    auto g = [&h](double u) {
      if (u <= 0.0) return 0.0;
      const double v = u * u;
      return 2.0 * u * h(v, 1.0 - v);
    };
    total += adaptive_simpson(g, 0.0, std::sqrt(v1), panel_tol, qctl.max_depth);
  }
  for (std::size_t i = 1; i + 2 < knots.size(); ++i) {
    auto g = [&h](double v) { return h(v, 1.0 - v); };
    total +=
        adaptive_simpson(g, knots[i], knots[i + 1], panel_tol, qctl.max_depth);
  }
  {  // right boundary panel under 1 - v = u^2
    const double v0 = knots[knots.size() - 2];
    auto g = [&h](double u) {
      if (u <= 0.0) return 0.0;
      const double omv = u * u;
      return 2.0 * u * h(1.0 - omv, omv);
    };
    total += adaptive_simpson(g, 0.0, std::sqrt(1.0 - v0), panel_tol,
                              qctl.max_depth);
  }
  return total;
}

struct BetaWeight {
  double a = 0.0;
  double b = 0.0;
  double logc = 0.0;
  BetaWeight(double a_, double b_)
      : a(a_),
        b(b_),
        logc(std::lgamma(a_ + b_) - std::lgamma(a_) - std::lgamma(b_)) {}
  double operator()(double v, double omv) const {
    if (v <= 0.0 || omv <= 0.0) return 0.0;
    return std::exp(logc + (a - 1.0) * std::log(v) +
                    (b - 1.0) * std::log(omv));
  }
  double mean() const { return a / (a + b); }
  double sd() const {
    return std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
  }
};

// E[f(V)] with V ~ Beta((p+2k)/2, m/2).
double beta_expectation(const Integrand01& f, int p, int m, long long k,
                        const QuadratureControl& qctl) {
  const BetaWeight w(0.5 * (p + 2.0 * static_cast<double>(k)), 0.5 * m);
  std::vector<double> extra;
  for (double fac : {-8.0, -4.0, -2.0, -1.0, 1.0, 2.0, 4.0, 8.0})
    extra.push_back(w.mean() + fac * w.sd());
  auto h = [&](double v, double omv) { return f(v, omv) * w(v, omv); };
  return integrate_unit(h, extra, qctl);
}

// E[f(W)] with W ~ chi^2_nu, taken over (0, infinity) through w = x/(1-x).
double chi2_expectation(const std::function<double(double)>& f, double nu,
                        const QuadratureControl& qctl) {
  const double logc = -0.5 * nu * std::log(2.0) - std::lgamma(0.5 * nu);
  auto h = [&](double x, double omx) {
    const double w = x / omx;
    const double logd = (0.5 * nu - 1.0) * std::log(w) - 0.5 * w + logc;
    const double d = std::exp(logd);
    if (d == 0.0) return 0.0;
    return f(w) * d / (omx * omx);
  };
  const double s = std::sqrt(2.0 * nu);
  std::vector<double> extra;
  for (double fac : {-8.0, -4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double w = nu + fac * s;
    if (w > 0.0) extra.push_back(w / (1.0 + w));
  }
  return integrate_unit(h, extra, qctl);
}

// Product of inverse even shifts: prod_{j=1..count} 1/(nu - 2j), nu = p + 2k.
double inv_shift_product(double nu, int count) {
  double prod = 1.0;
  for (int j = 1; j <= count; ++j) prod /= (nu - 2.0 * j);
  return prod;
}

struct PolyTerm {
  int deg = 0;
  double coeff = 0.0;
};

std::vector<PolyTerm> one_plus(const PhiPolySpec& phi) {
  std::vector<PolyTerm> out = {{0, 1.0}};
  for (const auto& t : phi.terms) out.push_back({t.degree, t.coeff});
  return out;
}

std::vector<PolyTerm> poly_square(const std::vector<PolyTerm>& a) {
  int dmax = 0;
  for (const auto& t : a) dmax = std::max(dmax, t.deg);
  std::vector<double> c(static_cast<std::size_t>(2 * dmax) + 1, 0.0);
  for (const auto& x : a)
    for (const auto& y : a)
      c[static_cast<std::size_t>(x.deg + y.deg)] += x.coeff * y.coeff;
  std::vector<PolyTerm> out;
  for (int d = 0; d <= 2 * dmax; ++d)
    if (c[static_cast<std::size_t>(d)] != 0.0)
      out.push_back({d, c[static_cast<std::size_t>(d)]});
  return out;
}

// E[poly(W/S)] and E[poly(W/S)/W] for W ~ chi^2_{p+2k} independent of
// S ~ chi^2_m: a term c t^j contributes c E[S^j] E[W^-j] (resp. E[W^-(j+1)])
// with E[S^j] = m(m+2)...(m+2j-2).
ConditionalIntegrals poly_integrals(const std::vector<PolyTerm>& poly, int p,
                                    int m, long long k) {
  int dmax = 0;
  for (const auto& t : poly) dmax = std::max(dmax, t.deg);
  const double nu = static_cast<double>(p) + 2.0 * static_cast<double>(k);
  if (nu <= 2.0 * (dmax + 1))
    fail_window("inverse chi-square moment of order " +
                std::to_string(dmax + 1) + " requires p + 2k > " +
                std::to_string(2 * (dmax + 1)));
  if (m < 1 && dmax > 0)
    fail_window("positive-degree spread corrections require m >= 1");
  ConditionalIntegrals out;
  for (const auto& t : poly) {
    double s_mom = 1.0;
    for (int j = 0; j < t.deg; ++j) s_mom *= (m + 2.0 * j);
    out.i1 += t.coeff * s_mom * inv_shift_product(nu, t.deg);
    out.i2 += t.coeff * s_mom * inv_shift_product(nu, t.deg + 1);
  }
  return out;
}

// Constant tail bound for series whose summand is a poly_integrals value
// (each inverse-shift product decreases in k, so the k = 0 value dominates).
double poly_sup(const std::vector<PolyTerm>& poly, int p, int m,
                bool inv_extra) {
  double s = 0.0;
  for (const auto& t : poly) {
    double s_mom = 1.0;
    for (int j = 0; j < t.deg; ++j) s_mom *= (m + 2.0 * j);
    s += std::abs(t.coeff) * s_mom *
         inv_shift_product(p, t.deg + (inv_extra ? 1 : 0));
  }
  return s;
}

void require_p_at_least(const MixtureParams& mp, int pmin,
                        const char* context) {
  if (mp.p < pmin)
    fail_window(std::string(context) + " requires p >= " +
                std::to_string(pmin));
}

void require_m_at_least(const MixtureParams& mp, int mmin,
                        const char* context) {
  if (mp.m < mmin)
    fail_window(std::string(context) + " requires m >= " +
                std::to_string(mmin));
}

}  // namespace

void MixtureParams::validate() const {
  if (p < 1) throw InvalidInputError("mixture params: p must be >= 1");
  if (m < 0) throw InvalidInputError("mixture params: m must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidInputError("mixture params: lambda must be finite and >= 0");
}

double poisson_expectation(const std::function<double(long long)>& g,
                           double lambda, const SeriesControl& ctl,
                           double sup_bound) {
  if (sup_bound <= 0.0)
    throw InvalidInputError("poisson_expectation: sup_bound must be > 0");
  return sum_poisson_series(lambda, ctl, g, sup_bound);
}

double poisson_expectation(
    const std::function<double(long long)>& g, double lambda,
    const SeriesControl& ctl,
    const std::function<double(long long, double, double)>& tail_bound) {
  if (!tail_bound)
    throw InvalidInputError("poisson_expectation: tail_bound must be callable");
  return sum_poisson_series(lambda, ctl, g, tail_bound);
}

MomentIdentities moment_identities(const MixtureParams& mp,
                                   const std::vector<int>& orders,
                                   const SeriesControl& ctl) {
  mp.validate();
  MomentIdentities out;
  const double p = mp.p;
  const double lam = mp.lambda;

  require_p_at_least(mp, 2, "e1");
  out.e1 = sum_poisson_series(
      lam, ctl, [&](long long k) { return 2.0 * lam / (p + 2.0 * k); },
      std::max(2.0 * lam / p, 1e-300));
  require_p_at_least(mp, 3, "e2");
  out.e2 = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double nu = p + 2.0 * static_cast<double>(k);
        return 2.0 * lam * (1.0 + 2.0 * k) / (nu * (nu - 2.0));
      },
      std::max(2.0 * lam / (p - 2.0), 1e-300));

  for (int order : orders) {
    if (order < 1)
      throw InvalidInputError("moment_identities: orders must be >= 1");
    if (p <= 2.0 * order)
      fail_window("inverse moment of order " + std::to_string(order) +
                  " requires p > " + std::to_string(2 * order));
    out.inverse_moments.push_back(sum_poisson_series(
        lam, ctl,
        [&](long long k) {
          return inv_shift_product(p + 2.0 * static_cast<double>(k), order);
        },
        inv_shift_product(p, order)));
  }
  return out;
}

double bias_ls_exact(const MixtureParams& mp, double beta,
                     const SeriesControl& ctl) {
  mp.validate();
  require_p_at_least(mp, 3, "least-squares bias");
  const double p = mp.p;
  const double e = sum_poisson_series(
      mp.lambda, ctl,
      [&](long long k) { return (p - 2.0) / (p + 2.0 * k - 2.0); }, 1.0);
  return -e * beta;
}

double bias_br_exact(const MixtureParams& mp, int ell, double beta,
                     const SeriesControl& ctl) {
  mp.validate();
  if (ell < 0) throw InvalidInputError("bias_br_exact: ell must be >= 0");
  if (2 * ell >= mp.p - 2)
    fail_window("order-" + std::to_string(ell) +
                " bias series requires ell < (p-2)/2, i.e. p > " +
                std::to_string(2 * ell + 2));
  const double p = mp.p;
  const double e = sum_poisson_series(
      mp.lambda, ctl,
      [&](long long k) {
        double prod = 1.0;
        for (int j = 1; j <= ell + 1; ++j)
          prod *= (p - 2.0 * j) / (p + 2.0 * k - 2.0 * j);
        return prod;
      },
      1.0);
  return -e * beta;
}

double mse_ls_exact(const MixtureParams& mp, double beta, double tau2,
                    double sigma2, const SeriesControl& ctl) {
  mp.validate();
  require_p_at_least(mp, 3, "least-squares MSE");
  if (!(tau2 >= 0.0) || !(sigma2 > 0.0))
    throw InvalidInputError("mse_ls_exact: need tau2 >= 0 and sigma2 > 0");
  const double p = mp.p;
  const double lam = mp.lambda;
  const double var_term = sum_poisson_series(
      lam, ctl, [&](long long k) { return 1.0 / (p + 2.0 * k - 2.0); },
      1.0 / (p - 2.0));
  const double bias_sq_term = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double nu = p + 2.0 * static_cast<double>(k);
        return 2.0 * lam * (1.0 + 2.0 * k) / (nu * (nu - 2.0)) -
               4.0 * lam / nu + 1.0;
      },
      2.0 * lam / (p - 2.0) + 4.0 * lam / p + 1.0);
  return tau2 / sigma2 * var_term + beta * beta * bias_sq_term;
}

ConditionalIntegrals lemma_integrals_poly(const MixtureParams& mp,
                                          const PhiPolySpec& phi,
                                          long long k) {
  mp.validate();
  phi.validate();
  return poly_integrals(one_plus(phi), mp.p, mp.m, k);
}

ConditionalIntegrals lemma_integrals_quad(
    const MixtureParams& mp, const std::function<double(double)>& phi,
    long long k, const QuadratureControl& qctl) {
  mp.validate();
  require_m_at_least(mp, 1, "spread-ratio integrals");
  ConditionalIntegrals out;
  // V = W/(W+S) ~ Beta((p+2k)/2, m/2); the ratio W/S equals v/(1-v).
  out.i1 = beta_expectation(
      [&](double v, double omv) { return 1.0 + phi(v / omv); }, mp.p, mp.m, k,
      qctl);
  // 1/W = 1/(T v) with T = W + S ~ chi^2_{p+2k+m} independent of V.
  const double nu_t = mp.p + 2.0 * static_cast<double>(k) + mp.m;
  if (nu_t <= 2.0) fail_window("E[1/W] requires p + 2k + m > 2");
  out.i2 = beta_expectation(
                [&](double v, double omv) { return (1.0 + phi(v / omv)) / v; },
                mp.p, mp.m, k, qctl) /
           (nu_t - 2.0);
  return out;
}

double mse_phi_exact(const MixtureParams& mp, const PhiPolySpec& phi,
                     double beta, double tau2, double sigma2,
                     const SeriesControl& ctl) {
  mp.validate();
  phi.validate();
  if (!(tau2 >= 0.0) || !(sigma2 > 0.0))
    throw InvalidInputError("mse_phi_exact: need tau2 >= 0 and sigma2 > 0");
  const int bigl = 2 * phi.max_degree();
  if (mp.p <= 2 * (bigl + 1))
    fail_window("finite MSE of an order-" + std::to_string(phi.max_degree()) +
                " correction requires p > " + std::to_string(2 * (bigl + 1)));
  if (phi.max_degree() > 0) require_m_at_least(mp, 1, "spread corrections");
  const double p = mp.p;
  const double lam = mp.lambda;
  const std::vector<PolyTerm> lin = one_plus(phi);
  const std::vector<PolyTerm> sq = poly_square(lin);

  // E[(1+phi)^2 / ||U||^2]: the tau^2 coefficient.
  const double a_term = sum_poisson_series(
      lam, ctl,
      [&](long long k) { return poly_integrals(sq, mp.p, mp.m, k).i2; },
      poly_sup(sq, mp.p, mp.m, true));
  // Squared and cross mean terms against the signal direction.
  const double b1 = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double nu = p + 2.0 * static_cast<double>(k);
        return 2.0 * lam * (1.0 + 2.0 * k) / nu *
               poly_integrals(sq, mp.p, mp.m, k).i2;
      },
      std::max(2.0 * lam * poly_sup(sq, mp.p, mp.m, true), 1e-300));
  const double b2 = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        return 2.0 * lam / (p + 2.0 * static_cast<double>(k)) *
               poly_integrals(lin, mp.p, mp.m, k).i1;
      },
      std::max(2.0 * lam / p * poly_sup(lin, mp.p, mp.m, false), 1e-300));

  return tau2 / sigma2 * a_term + beta * beta * (b1 - 2.0 * b2 + 1.0);
}

double bias_phi_exact(const MixtureParams& mp,
                      const std::function<double(double)>& phi, double beta,
                      const SeriesControl& ctl,
                      const QuadratureControl& qctl) {
  mp.validate();
  require_p_at_least(mp, 3, "multiplier bias");
  require_m_at_least(mp, 1, "multiplier bias");
  const double p = mp.p;
  const double lam = mp.lambda;
  const double mean_mult = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        return 2.0 * lam / (p + 2.0 * static_cast<double>(k)) *
               lemma_integrals_quad(mp, phi, k, qctl).i1;
      },
      0.0);
  return (mean_mult - 1.0) * beta;
}

double control_excess(const std::function<double(double)>& psi,
                      const MixtureParams& mp, const SeriesControl& ctl,
                      const QuadratureControl& qctl) {
  mp.validate();
  require_p_at_least(mp, 3, "control excess");
  require_m_at_least(mp, 1, "control excess");
  const double p = mp.p;
  const double m = mp.m;
  const double lam = mp.lambda;
  return sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double nu = p + 2.0 * static_cast<double>(k);
        const double h = beta_expectation(
            [&](double v, double) {
              const double ps = psi(v);
              return (1.0 + 2.0 * k) / (nu + m - 2.0) * ps * ps / v - 2.0 * ps;
            },
            mp.p, mp.m, k, qctl);
        return 2.0 * lam / nu * h;
      },
      0.0);
}

double mse_psi_exact(const std::function<double(double)>& psi,
                     const MixtureParams& mp, double beta, double tau2,
                     double sigma2, const SeriesControl& ctl,
                     const QuadratureControl& qctl) {
  mp.validate();
  require_p_at_least(mp, 3, "psi-class MSE");
  require_m_at_least(mp, 1, "psi-class MSE");
  if (!(tau2 >= 0.0) || !(sigma2 > 0.0))
    throw InvalidInputError("mse_psi_exact: need tau2 >= 0 and sigma2 > 0");
  const double p = mp.p;
  const double m = mp.m;
  // E[psi^2/||U||^2] = sum_k P(k) E[1/T] E[psi^2(V)/V].
  const double var_term = sum_poisson_series(
      mp.lambda, ctl,
      [&](long long k) {
        const double nu_t = p + 2.0 * static_cast<double>(k) + m;
        const double e = beta_expectation(
            [&](double v, double) {
              const double ps = psi(v);
              return ps * ps / v;
            },
            mp.p, mp.m, k, qctl);
        return e / (nu_t - 2.0);
      },
      0.0);
  const double excess = control_excess(psi, mp, ctl, qctl);
  return tau2 / sigma2 * var_term + beta * beta * (1.0 + excess);
}

double bias_psi_exact(const std::function<double(double)>& psi,
                      const MixtureParams& mp, double beta,
                      const SeriesControl& ctl,
                      const QuadratureControl& qctl) {
  mp.validate();
  require_p_at_least(mp, 3, "psi-class bias");
  require_m_at_least(mp, 1, "psi-class bias");
  const double p = mp.p;
  const double lam = mp.lambda;
  const double mean_mult = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double e = beta_expectation(
            [&](double v, double) { return psi(v); }, mp.p, mp.m, k, qctl);
        return 2.0 * lam / (p + 2.0 * static_cast<double>(k)) * e;
      },
      0.0);
  return (mean_mult - 1.0) * beta;
}

DominationReport verify_domination(const std::function<double(double)>& psi,
                                   const std::function<double(double)>& psibar,
                                   int p, int m, int grid_size) {
  if (p < 1 || m < 0)
    throw InvalidInputError("verify_domination: need p >= 1 and m >= 0");
  if (grid_size < 2)
    throw InvalidInputError("verify_domination: grid_size must be >= 2");
  DominationReport rep;
  rep.grid = grid_size;
  const double c = 2.0 * (p + m - 2.0);
  for (int i = 0; i < grid_size; ++i) {
    const double v = (i + 0.5) / grid_size;
    const double ps = psi(v);
    const double pb = psibar(v);
    const double sq = ps * ps - pb * pb;
    rep.max_sq_violation = std::max(rep.max_sq_violation, sq);
    const double delta = sq - c * v * (ps - pb);
    rep.max_delta_violation = std::max(rep.max_delta_violation, delta);
  }
  return rep;
}

EnvelopeReport bias_envelope_verify(const std::function<double(double)>& phi,
                                    const MixtureParams& mp, int ell,
                                    const SeriesControl& ctl,
                                    const QuadratureControl& qctl) {
  mp.validate();
  if (ell < 1)
    throw InvalidInputError("bias_envelope_verify: ell must be >= 1");
  require_p_at_least(mp, 5, "bias envelope");
  require_m_at_least(mp, 1, "bias envelope");
  if (2 * ell >= mp.p - 2)
    fail_window("bias envelope of order " + std::to_string(ell) +
                " requires ell < (p-2)/2");
  EnvelopeReport rep;
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = (i + 0.5) / 20000.0;
    const double t = v / (1.0 - v);
    double env = 0.0;
    for (int j = 1; j <= ell; ++j)
      env += br_coeff(j, mp.p, mp.m) * std::pow(t, -j);
    env *= 2.0;
    const double ph = phi(t);
    worst = std::max(worst, std::max(-ph, ph - env));
  }
  rep.max_envelope_violation = worst;
  rep.envelope_ok = worst <= 1e-12;
  rep.bias_phi = bias_phi_exact(mp, phi, 1.0, ctl, qctl);
  rep.bias_ls = bias_ls_exact(mp, 1.0, ctl);
  rep.bias_reduced = std::abs(rep.bias_phi) <= std::abs(rep.bias_ls) + 1e-10;
  return rep;
}

KnownVarianceReport known_variance_moments(
    int p, double lambda, int ell,
    const std::function<double(double)>& psibar, double beta,
    const SeriesControl& ctl, double w_max, int grid_size) {
  MixtureParams mp{p, 0, lambda};
  mp.validate();
  if (ell < 0) throw InvalidInputError("known_variance_moments: ell >= 0");
  if (2 * ell >= p - 2)
    fail_window("known-variance order-" + std::to_string(ell) +
                " series requires ell < (p-2)/2");
  KnownVarianceReport rep;

  // Series bias: the multiplier 1 + sum_j a_j W^-j with W ~ chi^2_{p+2k} has
  // closed inverse moments E[W^-j] = prod_{i<=j} 1/(p+2k-2i).
  const double pd = p;
  const double lam = lambda;
  double mult_sup = 1.0;
  for (int j = 1; j <= ell; ++j)
    mult_sup += std::abs(br_a(j, p)) * inv_shift_product(pd, j);
  const double mean_mult = sum_poisson_series(
      lam, ctl,
      [&](long long k) {
        const double nu = pd + 2.0 * static_cast<double>(k);
        double mult = 1.0;
        for (int j = 1; j <= ell; ++j)
          mult += br_a(j, p) * inv_shift_product(nu, j);
        return 2.0 * lam / nu * mult;
      },
      std::max(2.0 * lam / pd * mult_sup, 1e-300));
  rep.bias_br = (mean_mult - 1.0) * beta;

  // Delta0(w) = psi0^2 - psibar^2 - 2 w (psi0 - psibar) <= 0 on (0, w_max].
  if (grid_size < 2)
    throw InvalidInputError("known_variance_moments: grid_size must be >= 2");
  double worst = -HUGE_VAL;
  for (int i = 0; i < grid_size; ++i) {
    const double w = w_max * (i + 0.5) / grid_size;
    const double pb = psibar(w);
    const double p0 = std::max(0.0, std::min(pb, 2.0 * w - pb));
    const double d0 = p0 * p0 - pb * pb - 2.0 * w * (p0 - pb);
    worst = std::max(worst, d0);
  }
  rep.delta0_max = worst;
  rep.delta0_ok = worst <= 1e-12;
  return rep;
}

double known_variance_bias(const std::function<double(double)>& phi, int p,
                           double lambda, double beta,
                           const SeriesControl& ctl,
                           const QuadratureControl& qctl) {
  MixtureParams mp{p, 0, lambda};
  mp.validate();
  require_p_at_least(mp, 3, "known-variance bias");
  const double pd = p;
  const double mean_mult = sum_poisson_series(
      lambda, ctl,
      [&](long long k) {
        const double nu = pd + 2.0 * static_cast<double>(k);
        const double mult = chi2_expectation(
            [&phi](double w) { return 1.0 + phi(w); }, nu, qctl);
        return 2.0 * lambda / nu * mult;
      },
      0.0);
  return (mean_mult - 1.0) * beta;
}

}  // namespace eiv::exact
