#include "eiv/canonical.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eiv/errors.hpp"
#include "eiv/kernels.hpp"

namespace eiv {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Applies the Helmert rotation to v (length n) without building the matrix:
// out0 gets the 1/sqrt(n) row, out[k-1] the row contrasting the first k
// entries with entry k+1, k = 1..n-1.
void helmert_apply(const std::vector<double>& v, double* out0,
                   std::vector<double>* out) {
  const int n = int(v.size());
  double prefix = v[0];
  out->resize(n - 1);
  for (int k = 1; k < n; ++k) {
    (*out)[k - 1] = (prefix - double(k) * v[k]) / std::sqrt(double(k) * (k + 1));
    prefix += v[k];
  }
  *out0 = prefix / std::sqrt(double(n));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, int line_no) {
  const std::string t = trim(cell);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw InvalidInputError("csv: non-numeric cell '" + cell + "' at line " +
                            std::to_string(line_no));
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) cells.push_back(cur);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

void RepeatedMeasuresSample::validate() const {
  if (n < 4)
    throw InvalidInputError("sample: need at least 4 rows, got " +
                            std::to_string(n));
  if (r < 1) throw InvalidInputError("sample: need at least 1 replicate");
  if (int(y.size()) != n || int(x.size()) != n * r)
    throw InvalidInputError("sample: shape mismatch");
  if (!all_finite(y) || !all_finite(x))
    throw InvalidInputError("sample: non-finite entries");
}

void SufficientStats::validate() const {
  if (p < 1 || m < 0 || r < 1)
    throw InvalidInputError("stats: bad dimensions");
  if (!(u_sq > 0.0))
    throw InvalidInputError("stats: ||u||^2 must be positive");
  if (z_sq < 0.0 || s < 0.0)
    throw InvalidInputError("stats: negative squared norm");
  // Cauchy-Schwarz, with slack for rounding in hand-constructed inputs.
  if (t_uz * t_uz > u_sq * z_sq * (1.0 + 1e-9))
    throw InvalidInputError("stats: (u'z)^2 exceeds ||u||^2 ||z||^2");
}

RepeatedMeasuresSample load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("csv: cannot open '" + path + "'");

  std::string line;
  int line_no = 0;
  int r = -1;
  RepeatedMeasuresSample sample;

  auto next_content_line = [&](std::string* out) {
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      *out = t;
      return true;
    }
    return false;
  };

  std::string header;
  if (!next_content_line(&header))
    throw InvalidInputError("csv: missing header in '" + path + "'");
  const auto cols = split_csv(header);
  if (cols.empty() || trim(cols[0]) != "y")
    throw InvalidInputError("csv: header must start with 'y'");
  r = int(cols.size()) - 1;
  if (r < 1) throw InvalidInputError("csv: need at least one x column");
  for (int j = 1; j <= r; ++j) {
    if (trim(cols[j]) != "x" + std::to_string(j))
      throw InvalidInputError("csv: expected column 'x" + std::to_string(j) +
                              "', got '" + trim(cols[j]) + "'");
  }

  std::string row;
  while (next_content_line(&row)) {
    const auto cells = split_csv(row);
    if (int(cells.size()) != r + 1)
      throw InvalidInputError("csv: expected " + std::to_string(r + 1) +
                              " cells at line " + std::to_string(line_no) +
                              ", got " + std::to_string(cells.size()));
    sample.y.push_back(parse_cell(cells[0], line_no));
    for (int j = 1; j <= r; ++j)
      sample.x.push_back(parse_cell(cells[j], line_no));
  }

  sample.n = int(sample.y.size());
  sample.r = r;
  sample.validate();
  return sample;
}

std::vector<double> helmert_q(int n) {
  if (n < 2) throw InvalidInputError("helmert: need n >= 2");
  std::vector<double> q(std::size_t(n) * n, 0.0);
  const double rn = 1.0 / std::sqrt(double(n));
  for (int j = 0; j < n; ++j) q[j] = rn;
  for (int k = 1; k < n; ++k) {
    const double denom = 1.0 / std::sqrt(double(k) * (k + 1));
    for (int j = 0; j < k; ++j) q[std::size_t(k) * n + j] = denom;
    q[std::size_t(k) * n + k] = -double(k) * denom;
  }
  return q;
}

CanonicalStats canonicalize(const RepeatedMeasuresSample& sample) {
  sample.validate();
  const int n = sample.n;
  const int r = sample.r;

  std::vector<double> xbar(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = sample.x.data() + std::size_t(i) * r;
    double mean = 0.0;
    for (int j = 0; j < r; ++j) mean += row[j];
    mean /= double(r);
    xbar[i] = mean;
    for (int j = 0; j < r; ++j) s += (row[j] - mean) * (row[j] - mean);
  }
  s /= double(r);

  CanonicalStats cs;
  cs.p = n - 1;
  cs.m = n * (r - 1);
  cs.r = r;
  cs.s = s;
  helmert_apply(sample.y, &cs.z0, &cs.z);
  helmert_apply(xbar, &cs.u0, &cs.u);
  return cs;
}

SufficientStats sufficient_stats(const CanonicalStats& cs) {
  SufficientStats st;
  st.p = cs.p;
  st.m = cs.m;
  st.r = cs.r;
  st.u0 = cs.u0;
  st.z0 = cs.z0;
  st.s = cs.s;
  const std::size_t p = cs.u.size();
  st.t_uz = kernels::dot(cs.u.data(), cs.z.data(), p);
  st.u_sq = kernels::sumsq(cs.u.data(), p);
  st.z_sq = kernels::sumsq(cs.z.data(), p);
  st.validate();
  return st;
}

SufficientStats sufficient_from_sample(const RepeatedMeasuresSample& sample) {
  return sufficient_stats(canonicalize(sample));
}

}  // namespace eiv
