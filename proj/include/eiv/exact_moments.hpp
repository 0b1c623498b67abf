#pragma once

#include <functional>
#include <vector>

#include "eiv/estimators.hpp"

// Exact finite-sample bias and MSE for the slope estimators, computed through
// Poisson mixtures: with lambda = ||xi||^2 / (2 sigma^2) and K ~ Poisson(lambda),
// every moment below is a Poisson-weighted series of central chi-square or
// Beta expectations. Series are truncated with certified tail bounds where a
// summand bound is available, and past the Poisson bulge otherwise; quadrature
// is adaptive with endpoint substitutions for the Beta weight singularities.

namespace eiv::exact {

struct MixtureParams {
  int p = 0;
  int m = 0;
  double lambda = 0.0;
  void validate() const;
};

struct SeriesControl {
  double abs_tol = 1e-12;
  long long max_terms = 100000;
};

struct QuadratureControl {
  double abs_tol = 1e-10;
  int max_depth = 48;
};

// E[g(K)] truncated once sup_bound * P(K > k) < abs_tol; sup_bound must
// dominate |g| on every tail. The callable overload receives
// (k, P(K = k), P(K > k)) and must return a bound on the remaining sum.
double poisson_expectation(const std::function<double(long long)>& g,
                           double lambda, const SeriesControl& ctl,
                           double sup_bound);
double poisson_expectation(
    const std::function<double(long long)>& g, double lambda,
    const SeriesControl& ctl,
    const std::function<double(long long, double, double)>& tail_bound);

// Inverse-moment products E[prod_{j<=i} (p + 2K - 2j)^(-1)] for each order in
// `orders` (each order i needs p > 2i), plus the two first-moment identities
//   e1 = E[2 lambda / (p + 2K)]            (p >= 2)
//   e2 = E[2 lambda (1+2K) / ((p+2K)(p+2K-2))]   (p >= 3).
struct MomentIdentities {
  double e1 = 0.0;
  double e2 = 0.0;
  std::vector<double> inverse_moments;
};
MomentIdentities moment_identities(const MixtureParams&,
                                   const std::vector<int>& orders,
                                   const SeriesControl& = {});

// Bias of the least-squares slope: -E[(p-2)/(p+2K-2)] beta, for p >= 3.
double bias_ls_exact(const MixtureParams&, double beta,
                     const SeriesControl& = {});

// Bias of the order-ell series estimator:
// -E[prod_{j=1..ell+1} (p-2j)/(p+2K-2j)] beta. Valid for ell < (p-2)/2;
// independent of m. ell = 0 reproduces the least-squares bias.
double bias_br_exact(const MixtureParams&, int ell, double beta,
                     const SeriesControl& = {});

// MSE of the least-squares slope (p >= 3):
// (tau^2/sigma^2) E[1/(p+2K-2)]
//   + beta^2 E[2 lambda (1+2K)/((p+2K)(p+2K-2)) - 4 lambda/(p+2K) + 1].
double mse_ls_exact(const MixtureParams&, double beta, double tau2,
                    double sigma2, const SeriesControl& = {});

// Conditional building blocks behind the polynomial-correction moments:
// i1 = E[phi(W/S)] and i2 = E[phi(W/S)/W] for W ~ chi^2_{p+2k}, S ~ chi^2_m
// independent. Closed product form for polynomial phi; quadrature for any phi.
struct ConditionalIntegrals {
  double i1 = 0.0;
  double i2 = 0.0;
};
ConditionalIntegrals lemma_integrals_poly(const MixtureParams&,
                                          const PhiPolySpec&, long long k);
ConditionalIntegrals lemma_integrals_quad(const MixtureParams&,
                                          const std::function<double(double)>& phi,
                                          long long k,
                                          const QuadratureControl& = {});

// Exact MSE of {1 + phi(||u||^2/s)} ls for polynomial phi; requires
// p > 4L + 2 where L is the highest degree in phi.
double mse_phi_exact(const MixtureParams&, const PhiPolySpec&, double beta,
                     double tau2, double sigma2, const SeriesControl& = {});

// Exact bias of {1 + phi} ls for any evaluable phi (quadrature route).
double bias_phi_exact(const MixtureParams&,
                      const std::function<double(double)>& phi, double beta,
                      const SeriesControl& = {}, const QuadratureControl& = {});

// E[{psi(V) u'z-part}] control quantity: mse_psi = tau^2 E[psi^2/||U||^2]
//   + beta^2 (1 + control_excess). control_excess(psi == 1) equals e2 - 2 e1.
double control_excess(const std::function<double(double)>& psi,
                      const MixtureParams&, const SeriesControl& = {},
                      const QuadratureControl& = {});
double mse_psi_exact(const std::function<double(double)>& psi,
                     const MixtureParams&, double beta, double tau2,
                     double sigma2, const SeriesControl& = {},
                     const QuadratureControl& = {});
double bias_psi_exact(const std::function<double(double)>& psi,
                      const MixtureParams&, double beta,
                      const SeriesControl& = {}, const QuadratureControl& = {});

// Sufficient conditions for MSE domination of psi over psibar:
//   psi^2 <= psibar^2 and
//   Delta(v) = psi^2 - psibar^2 - 2(p+m-2) v (psi - psibar) <= 0 on (0,1).
struct DominationReport {
  int grid = 0;
  double max_sq_violation = 0.0;
  double max_delta_violation = 0.0;
  bool pass(double tol = 1e-12) const {
    return max_sq_violation <= tol && max_delta_violation <= tol;
  }
};
DominationReport verify_domination(const std::function<double(double)>& psi,
                                   const std::function<double(double)>& psibar,
                                   int p, int m, int grid_size = 10000);

// Bias-domination sufficient condition for a correction phi of order ell:
//   0 <= phi(t) <= 2 sum_{j<=ell} (a_j/b_j) t^(-j), with ell < (p-2)/2,
// implies |bias| <= |ls bias|. The report carries both the envelope check and
// the realized bias comparison.
struct EnvelopeReport {
  bool envelope_ok = false;
  double max_envelope_violation = 0.0;
  double bias_phi = 0.0;
  double bias_ls = 0.0;
  bool bias_reduced = false;
};
EnvelopeReport bias_envelope_verify(const std::function<double(double)>& phi,
                                    const MixtureParams&, int ell,
                                    const SeriesControl& = {},
                                    const QuadratureControl& = {});

// Known measurement variance (sigma^2 = 1 units). The series bias of the
// order-ell estimator matches the unknown-variance product form; psi0 built
// on psibar must satisfy Delta0(w) = psi0^2 - psibar^2 - 2w(psi0 - psibar) <= 0.
struct KnownVarianceReport {
  double bias_br = 0.0;
  double delta0_max = 0.0;
  bool delta0_ok = false;
};
KnownVarianceReport known_variance_moments(
    int p, double lambda, int ell,
    const std::function<double(double)>& psibar, double beta,
    const SeriesControl& = {}, double w_max = 50.0, int grid_size = 10000);

// Bias of a known-variance multiplier phi(||u||^2) (quadrature route).
double known_variance_bias(const std::function<double(double)>& phi, int p,
                           double lambda, double beta,
                           const SeriesControl& = {},
                           const QuadratureControl& = {});

}  // namespace eiv::exact
