#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eiv/canonical.hpp"
#include "eiv/estimators.hpp"

// Monte Carlo harness for the rotated measurement-error model. Replication i
// draws from the counter-based substream (seed, i), so runs are reproducible
// and independent of the worker count: chunks of 4096 replications are
// accumulated independently and merged in index order.
//
// Canonical-level draw layout (normal variates, in stream order):
//   [0]        Z0 shock:  Z0 = sqrt(n) alpha + beta theta + tau N
//   [1]        U0 shock:  U0 = theta + sigma N
//   [2, 2+p)   Z  shocks:  Z  = beta xi + tau N_p
//   [2+p,2+2p) U  shocks:  U  = xi + sigma N_p
//   [2+2p, +m) S  shocks:  S  = sigma^2 * sum of m squared normals
// Raw-level layout: n response shocks (variance tau^2), then n*r replicate
// shocks row-major (variance r sigma^2); gamma = Q^t (theta, xi).

namespace eiv::mc {

struct XiSpec {
  enum class Mode { constant_fill, explicit_vector };
  Mode mode = Mode::constant_fill;
  double value = 1.0;                // constant_fill: every coordinate
  std::vector<double> values;        // explicit_vector: length p
};

struct SimConfig {
  int n = 0;
  int r = 2;
  double beta = -5.0;
  double alpha = 0.0;
  double theta = 0.0;
  double tau2 = 10.0;
  double sigma2 = 1.0;
  XiSpec xi;
  std::vector<std::string> estimators;
  // Paired comparisons on common draws: mean(dA^2 - dB^2) with its SE.
  std::vector<std::pair<std::string, std::string>> pairs;
  BayesHyperparams bayes;
  long long reps = 100000;
  std::uint64_t seed = 1;
  enum class Level { canonical, raw } level = Level::canonical;

  int p() const { return n - 1; }
  int m() const { return n * (r - 1); }
  std::vector<double> xi_vector() const;
  double lambda() const;  // ||xi||^2 / (2 sigma^2)
  void validate() const;
};

struct EstimatorRow {
  std::string id;
  double bias = 0.0;
  double se_bias = 0.0;
  double mse = 0.0;
  double se_mse = 0.0;
  long long failures = 0;  // singular / non-finite evaluations, excluded
  long long used = 0;
};

struct PairRow {
  std::string a;
  std::string b;
  double mse_diff = 0.0;  // mean over replications where both succeed
  double se_diff = 0.0;
  long long used = 0;
};

struct SimResult {
  SimConfig config;
  double lambda = 0.0;
  std::vector<EstimatorRow> rows;
  std::vector<PairRow> pairs;
};

// One canonical-model draw from substream (cfg.seed, stream).
CanonicalStats sample_canonical(const SimConfig& cfg, std::uint64_t stream);
// One raw-model draw; canonicalizing it reproduces the canonical laws.
RepeatedMeasuresSample sample_raw(const SimConfig& cfg, std::uint64_t stream);

// Evaluates cfg.estimators (ids resolved through the registry) replication by
// replication. Throws InvalidInputError for unknown ids up front and
// SingularEstimateError never (failures are counted per row instead); throws
// Error if every replication failed for some estimator.
SimResult run_study(const SimConfig& cfg);

// Same harness with caller-supplied estimator callables (paired entries refer
// to names in this list). A callable may signal failure by throwing
// SingularEstimateError or returning a non-finite value.
using EstimatorFn = std::function<double(const SufficientStats&)>;
SimResult run_study_custom(
    const SimConfig& cfg,
    const std::vector<std::pair<std::string, EstimatorFn>>& fns);

// The 12 simulation cells: n in {10, 30, 100} crossed with
// (sigma_xi^2, sigma^2) in {(1/10, 1), (1/10, 10), (5, 1), (5, 10)},
// xi constant-filled with sqrt(sigma_xi^2), lambda = p sigma_xi^2 / (2 sigma^2).
struct SimCell {
  int n = 0;
  double sigma_xi2 = 0.0;
  double sigma2 = 0.0;
  double lambda = 0.0;
};
std::vector<SimCell> table3_lambdas();

// Runs the full simulation suite over the 12 cells with beta = -5, tau2 = 10,
// r = 2 and estimators {ls, tls, br1, tbr1, br5, tbr5, gg, tgg}; the order-5
// pair is skipped at n = 10 where those estimators have no finite moments.
// Each cell gets the paired comparison (tgg, gg) on common draws.
std::vector<SimResult> table4_suite(long long reps, std::uint64_t seed);

}  // namespace eiv::mc
