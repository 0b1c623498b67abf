#pragma once

// Shared helpers for the test binaries: seeded model draws without the
// simulation engine, so module tests stay independent of it.

#include <random>
#include <vector>

#include "eiv/canonical.hpp"

namespace testsupport {

struct ModelParams {
  int p = 9;
  int m = 10;
  int r = 2;
  double beta = -5.0;
  double tau2 = 10.0;
  double sigma2 = 1.0;
  double xi_fill = 1.0;
  double theta = 0.0;
  double alpha = 0.0;
};

inline eiv::CanonicalStats draw_canonical(const ModelParams& mp,
                                          std::mt19937_64& gen) {
  std::normal_distribution<double> N(0.0, 1.0);
  const double tau = std::sqrt(mp.tau2);
  const double sigma = std::sqrt(mp.sigma2);
  eiv::CanonicalStats cs;
  cs.p = mp.p;
  cs.m = mp.m;
  cs.r = mp.r;
  cs.z0 = mp.alpha + mp.beta * mp.theta + tau * N(gen);
  cs.u0 = mp.theta + sigma * N(gen);
  cs.z.resize(mp.p);
  cs.u.resize(mp.p);
  for (int i = 0; i < mp.p; ++i) {
    cs.z[i] = mp.beta * mp.xi_fill + tau * N(gen);
    cs.u[i] = mp.xi_fill + sigma * N(gen);
  }
  cs.s = 0.0;
  for (int i = 0; i < mp.m; ++i) {
    const double e = sigma * N(gen);
    cs.s += e * e;
  }
  return cs;
}

inline eiv::SufficientStats draw_stats(const ModelParams& mp,
                                       std::mt19937_64& gen) {
  return eiv::sufficient_stats(draw_canonical(mp, gen));
}

// Stats with exactly the requested scalars (and the Cauchy-Schwarz slack
// needed for hand-picked z_sq).
inline eiv::SufficientStats make_stats(double t_uz, double u_sq, double z_sq,
                                       double s, int p, int m, int r = 2,
                                       double u0 = 0.0, double z0 = 0.0) {
  eiv::SufficientStats st;
  st.t_uz = t_uz;
  st.u_sq = u_sq;
  st.z_sq = z_sq;
  st.s = s;
  st.p = p;
  st.m = m;
  st.r = r;
  st.u0 = u0;
  st.z0 = z0;
  st.validate();
  return st;
}

}  // namespace testsupport
