#pragma once

#include <string>

#include "eiv/canonical.hpp"

// Constructs raw samples whose sufficient statistics hit prescribed values:
// u is placed along the first rotated axis, z in the span of the first two,
// the within-group spread is carried by a +/- pattern in group 1, and the
// result is rotated back through Q^t. Useful for end-to-end tests when only
// summary statistics are published for a dataset.

namespace eiv {

struct FixtureTargets {
  double t_uz = 0.0;
  double u_sq = 1.0;
  double z_sq = 0.0;
  double s = 0.0;
  int p = 0;   // n = p + 1
  int r = 2;
  double u0 = 0.0;
  double z0 = 0.0;
  void validate() const;
};

RepeatedMeasuresSample make_fixture(const FixtureTargets& t);

// Writes y,x1,...,xr with full-precision fields so the sample round-trips
// through load_csv bit-exactly.
void write_sample_csv(const std::string& path,
                      const RepeatedMeasuresSample& sample);

}  // namespace eiv
