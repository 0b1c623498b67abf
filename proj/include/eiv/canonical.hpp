#pragma once

#include <string>
#include <vector>

// Reduction of the repeated-measures regression sample to its rotated form.
// An orthogonal matrix with first row 1/sqrt(n) (the Helmert matrix here)
// carries y to (z0, z) and the replicate row means to (u0, u); together with
// the pooled within-row spread s these are everything the estimators consume:
//   z ~ N_p(beta*xi, tau^2 I), u ~ N_p(xi, sigma^2 I), s ~ sigma^2 chi^2_m,
// mutually independent, with p = n-1, m = n(r-1), sigma^2 = sigma_x^2 / r.

namespace eiv {

struct RepeatedMeasuresSample {
  std::vector<double> y;  // length n
  std::vector<double> x;  // n x r, row-major
  int n = 0;
  int r = 0;
  void validate() const;  // throws InvalidInputError
};

struct CanonicalStats {
  double z0 = 0.0;
  double u0 = 0.0;
  std::vector<double> z;  // length p
  std::vector<double> u;  // length p
  double s = 0.0;
  int p = 0;
  int m = 0;
  int r = 0;
};

// The scalars every estimator is a function of.
struct SufficientStats {
  double t_uz = 0.0;  // u'z
  double u_sq = 0.0;  // ||u||^2
  double z_sq = 0.0;  // ||z||^2
  double u0 = 0.0;
  double z0 = 0.0;
  double s = 0.0;
  int p = 0;
  int m = 0;
  int r = 0;
  void validate() const;  // throws InvalidInputError
};

// CSV with header "y,x1,...,xr", '#' comment lines allowed. Requires n >= 4;
// r = 1 is accepted but limits the downstream estimators to the
// known-variance family (s is 0 and m is 0 in that case).
RepeatedMeasuresSample load_csv(const std::string& path);

// Row-major n x n Helmert matrix: row 1 is 1/sqrt(n), row k+1 averages the
// first k entries against the (k+1)-th. Orthogonal by construction.
std::vector<double> helmert_q(int n);

CanonicalStats canonicalize(const RepeatedMeasuresSample& sample);
SufficientStats sufficient_stats(const CanonicalStats& cs);
SufficientStats sufficient_from_sample(const RepeatedMeasuresSample& sample);

}  // namespace eiv
