#include "eiv/fixture.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "eiv/errors.hpp"

namespace eiv {

void FixtureTargets::validate() const {
  if (p < 2) throw InvalidInputError("fixture: p must be >= 2");
  if (r < 1) throw InvalidInputError("fixture: r must be >= 1");
  if (!(u_sq > 0.0)) throw InvalidInputError("fixture: u_sq must be > 0");
  if (z_sq < 0.0) throw InvalidInputError("fixture: z_sq must be >= 0");
  if (t_uz * t_uz > u_sq * z_sq * (1.0 + 1e-12))
    throw InvalidInputError(
        "fixture: t_uz^2 <= u_sq * z_sq is required (Cauchy-Schwarz)");
  if (s < 0.0) throw InvalidInputError("fixture: s must be >= 0");
  if (s > 0.0 && r < 2)
    throw InvalidInputError("fixture: within-group spread requires r >= 2");
}

RepeatedMeasuresSample make_fixture(const FixtureTargets& t) {
  t.validate();
  const int n = t.p + 1;
  std::vector<double> u(t.p, 0.0), z(t.p, 0.0);
  u[0] = std::sqrt(t.u_sq);
  z[0] = t.t_uz / u[0];
  z[1] = std::sqrt(std::max(0.0, t.z_sq - z[0] * z[0]));

  const std::vector<double> q = helmert_q(n);
  RepeatedMeasuresSample out;
  out.n = n;
  out.r = t.r;
  out.y.resize(n);
  out.x.resize(static_cast<std::size_t>(n) * t.r);
  const double delta = t.s > 0.0 ? std::sqrt(t.r * t.s / 2.0) : 0.0;
  for (int i = 0; i < n; ++i) {
    double yi = q[i] * t.z0;
    double xi = q[i] * t.u0;
    for (int k = 1; k < n; ++k) {
      yi += q[k * n + i] * z[k - 1];
      xi += q[k * n + i] * u[k - 1];
    }
    out.y[i] = yi;
    for (int j = 0; j < t.r; ++j) out.x[i * t.r + j] = xi;
  }
  if (delta > 0.0) {
    out.x[0] += delta;
    out.x[1] -= delta;
  }
  return out;
}

void write_sample_csv(const std::string& path,
                      const RepeatedMeasuresSample& sample) {
  std::ofstream os(path);
  if (!os) throw InvalidInputError("fixture: cannot open '" + path + "'");
  os << "y";
  for (int j = 1; j <= sample.r; ++j) os << ",x" << j;
  os << "\n";
  char buf[64];
  for (int i = 0; i < sample.n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", sample.y[i]);
    os << buf;
    for (int j = 0; j < sample.r; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", sample.x[i * sample.r + j]);
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace eiv
