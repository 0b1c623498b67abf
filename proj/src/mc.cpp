#include "eiv/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "eiv/errors.hpp"
#include "eiv/kernels.hpp"

namespace eiv::mc {

namespace {

constexpr long long kChunk = 4096;

int worker_count(long long chunks) {
  const long long cap = std::max(1LL, chunks);
  if (const char* env = std::getenv("EIVREG_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(std::min<long long>(v, cap));
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<long long>(hc ? hc : 1, cap));
}

// Normal variates consumed by one canonical replication.
std::size_t canonical_draw_size(const SimConfig& cfg) {
  return 2 + 2 * static_cast<std::size_t>(cfg.p()) +
         static_cast<std::size_t>(cfg.m());
}

void fill_canonical(const SimConfig& cfg, std::uint64_t stream,
                    const std::vector<double>& xi, std::vector<double>& buf,
                    CanonicalStats& out) {
  const int p = cfg.p();
  const int m = cfg.m();
  const double tau = std::sqrt(cfg.tau2);
  const double sig = std::sqrt(cfg.sigma2);
  buf.resize(canonical_draw_size(cfg));
  kernels::fill_normals(cfg.seed, stream, 0, buf.data(), buf.size());

  out.p = p;
  out.m = m;
  out.r = cfg.r;
  out.z0 = std::sqrt(static_cast<double>(cfg.n)) * cfg.alpha +
           cfg.beta * cfg.theta + tau * buf[0];
  out.u0 = cfg.theta + sig * buf[1];
  out.z.resize(static_cast<std::size_t>(p));
  out.u.resize(static_cast<std::size_t>(p));
  const double* ze = buf.data() + 2;
  const double* ue = buf.data() + 2 + p;
  for (int i = 0; i < p; ++i) {
    out.z[static_cast<std::size_t>(i)] = cfg.beta * xi[static_cast<std::size_t>(i)] + tau * ze[i];
    out.u[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i)] + sig * ue[i];
  }
  out.s = cfg.sigma2 * kernels::sumsq(buf.data() + 2 + 2 * p,
                                      static_cast<std::size_t>(m));
}

// gamma = Q^t (theta, xi): the latent group means matching (theta, xi).
std::vector<double> gamma_from(const SimConfig& cfg,
                               const std::vector<double>& xi) {
  const int n = cfg.n;
  const std::vector<double> q = helmert_q(n);
  std::vector<double> gamma(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = q[static_cast<std::size_t>(i)] * cfg.theta;  // row 0, col i
    for (int k = 1; k < n; ++k)
      acc += q[static_cast<std::size_t>(k) * n + i] * xi[static_cast<std::size_t>(k - 1)];
    gamma[static_cast<std::size_t>(i)] = acc;
  }
  return gamma;
}

void fill_raw(const SimConfig& cfg, std::uint64_t stream,
              const std::vector<double>& gamma, std::vector<double>& buf,
              RepeatedMeasuresSample& out) {
  const int n = cfg.n;
  const int r = cfg.r;
  const double tau = std::sqrt(cfg.tau2);
  const double sx = std::sqrt(static_cast<double>(r) * cfg.sigma2);
  buf.resize(static_cast<std::size_t>(n) * (1 + static_cast<std::size_t>(r)));
  kernels::fill_normals(cfg.seed, stream, 0, buf.data(), buf.size());

  out.n = n;
  out.r = r;
  out.y.resize(static_cast<std::size_t>(n));
  out.x.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(r));
  for (int i = 0; i < n; ++i)
    out.y[static_cast<std::size_t>(i)] =
        cfg.alpha + cfg.beta * gamma[static_cast<std::size_t>(i)] + tau * buf[static_cast<std::size_t>(i)];
  const double* eps = buf.data() + n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j)
      out.x[static_cast<std::size_t>(i) * r + j] =
          gamma[static_cast<std::size_t>(i)] + sx * eps[static_cast<std::size_t>(i) * r + j];
}

struct EstAcc {
  double sd = 0.0;   // sum of d
  double sd2 = 0.0;  // sum of d^2
  double sd4 = 0.0;  // sum of d^4
  long long used = 0;
  long long failures = 0;
};

struct PairAcc {
  double sdiff = 0.0;   // sum of dA^2 - dB^2
  double sdiff2 = 0.0;  // sum of its square
  long long used = 0;
};

struct ChunkAcc {
  std::vector<EstAcc> est;
  std::vector<PairAcc> pr;
};

double se_of_mean(double sum, double sum_sq, long long n) {
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

std::vector<double> SimConfig::xi_vector() const {
  const std::size_t np = static_cast<std::size_t>(p());
  if (xi.mode == XiSpec::Mode::constant_fill)
    return std::vector<double>(np, xi.value);
  if (xi.values.size() != np)
    throw InvalidInputError("sim config: explicit xi must have length p = n-1");
  return xi.values;
}

double SimConfig::lambda() const {
  const std::vector<double> v = xi_vector();
  double nsq = 0.0;
  for (double c : v) nsq += c * c;
  return nsq / (2.0 * sigma2);
}

void SimConfig::validate() const {
  if (n < 2) throw InvalidInputError("sim config: n must be >= 2");
  if (r < 1) throw InvalidInputError("sim config: r must be >= 1");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2))
    throw InvalidInputError("sim config: tau2 must be finite and >= 0");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw InvalidInputError("sim config: sigma2 must be finite and >= 0");
  if (reps < 1) throw InvalidInputError("sim config: reps must be >= 1");
  if (xi.mode == XiSpec::Mode::explicit_vector &&
      xi.values.size() != static_cast<std::size_t>(p()))
    throw InvalidInputError("sim config: explicit xi must have length p = n-1");
}

CanonicalStats sample_canonical(const SimConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const std::vector<double> xi = cfg.xi_vector();
  std::vector<double> buf;
  CanonicalStats out;
  fill_canonical(cfg, stream, xi, buf, out);
  return out;
}

RepeatedMeasuresSample sample_raw(const SimConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const std::vector<double> gamma = gamma_from(cfg, cfg.xi_vector());
  std::vector<double> buf;
  RepeatedMeasuresSample out;
  fill_raw(cfg, stream, gamma, buf, out);
  return out;
}

SimResult run_study_custom(
    const SimConfig& cfg,
    const std::vector<std::pair<std::string, EstimatorFn>>& fns) {
  cfg.validate();
  if (fns.empty())
    throw InvalidInputError("run_study: at least one estimator is required");

  const std::size_t nest = fns.size();
  std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
  for (const auto& pr : cfg.pairs) {
    std::size_t ia = nest, ib = nest;
    for (std::size_t i = 0; i < nest; ++i) {
      if (fns[i].first == pr.first) ia = i;
      if (fns[i].first == pr.second) ib = i;
    }
    if (ia == nest || ib == nest)
      throw InvalidInputError("run_study: pair names must be in the estimator list");
    pair_idx.emplace_back(ia, ib);
  }

  const std::vector<double> xi = cfg.xi_vector();
  const std::vector<double> gamma =
      cfg.level == SimConfig::Level::raw ? gamma_from(cfg, xi)
                                         : std::vector<double>{};

  const long long nchunks = (cfg.reps + kChunk - 1) / kChunk;
  std::vector<ChunkAcc> partials(static_cast<std::size_t>(nchunks));
  std::atomic<long long> next{0};

  auto work = [&]() {
    std::vector<double> buf;
    CanonicalStats cs;
    RepeatedMeasuresSample raw;
    std::vector<double> d2(nest);
    std::vector<char> ok(nest);
    long long c;
    while ((c = next.fetch_add(1)) < nchunks) {
      ChunkAcc acc;
      acc.est.resize(nest);
      acc.pr.resize(pair_idx.size());
      const long long lo = c * kChunk;
      const long long hi = std::min(cfg.reps, lo + kChunk);
      for (long long rep = lo; rep < hi; ++rep) {
        SufficientStats stats;
        if (cfg.level == SimConfig::Level::canonical) {
          fill_canonical(cfg, static_cast<std::uint64_t>(rep), xi, buf, cs);
          stats = sufficient_stats(cs);
        } else {
          fill_raw(cfg, static_cast<std::uint64_t>(rep), gamma, buf, raw);
          stats = sufficient_from_sample(raw);
        }
        for (std::size_t e = 0; e < nest; ++e) {
          double est;
          bool good = true;
          try {
            est = fns[e].second(stats);
            good = std::isfinite(est);
          } catch (const SingularEstimateError&) {
            good = false;
            est = 0.0;
          }
          if (!good) {
            ++acc.est[e].failures;
            ok[e] = 0;
            continue;
          }
          const double d = est - cfg.beta;
          const double dd = d * d;
          acc.est[e].sd += d;
          acc.est[e].sd2 += dd;
          acc.est[e].sd4 += dd * dd;
          ++acc.est[e].used;
          d2[e] = dd;
          ok[e] = 1;
        }
        for (std::size_t q = 0; q < pair_idx.size(); ++q) {
          const auto [ia, ib] = pair_idx[q];
          if (!ok[ia] || !ok[ib]) continue;
          const double diff = d2[ia] - d2[ib];
          acc.pr[q].sdiff += diff;
          acc.pr[q].sdiff2 += diff * diff;
          ++acc.pr[q].used;
        }
      }
      partials[static_cast<std::size_t>(c)] = std::move(acc);
    }
  };

  const int workers = worker_count(nchunks);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Merge in chunk-index order: the result is independent of scheduling.
  std::vector<EstAcc> est(nest);
  std::vector<PairAcc> pr(pair_idx.size());
  for (const auto& part : partials) {
    for (std::size_t e = 0; e < nest; ++e) {
      est[e].sd += part.est[e].sd;
      est[e].sd2 += part.est[e].sd2;
      est[e].sd4 += part.est[e].sd4;
      est[e].used += part.est[e].used;
      est[e].failures += part.est[e].failures;
    }
    for (std::size_t q = 0; q < pr.size(); ++q) {
      pr[q].sdiff += part.pr[q].sdiff;
      pr[q].sdiff2 += part.pr[q].sdiff2;
      pr[q].used += part.pr[q].used;
    }
  }

  SimResult out;
  out.config = cfg;
  out.lambda = cfg.lambda();
  for (std::size_t e = 0; e < nest; ++e) {
    if (est[e].used == 0)
      throw Error("run_study: every replication failed for estimator '" +
                  fns[e].first + "'");
    EstimatorRow row;
    row.id = fns[e].first;
    const double n_used = static_cast<double>(est[e].used);
    row.bias = est[e].sd / n_used;
    row.mse = est[e].sd2 / n_used;
    row.se_bias = se_of_mean(est[e].sd, est[e].sd2, est[e].used);
    row.se_mse = se_of_mean(est[e].sd2, est[e].sd4, est[e].used);
    row.failures = est[e].failures;
    row.used = est[e].used;
    out.rows.push_back(std::move(row));
  }
  for (std::size_t q = 0; q < pr.size(); ++q) {
    PairRow row;
    row.a = cfg.pairs[q].first;
    row.b = cfg.pairs[q].second;
    if (pr[q].used > 0) row.mse_diff = pr[q].sdiff / static_cast<double>(pr[q].used);
    row.se_diff = se_of_mean(pr[q].sdiff, pr[q].sdiff2, pr[q].used);
    row.used = pr[q].used;
    out.pairs.push_back(std::move(row));
  }
  return out;
}

SimResult run_study(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.estimators.empty())
    throw InvalidInputError("run_study: estimator list is empty");
  std::vector<std::pair<std::string, EstimatorFn>> fns;
  fns.reserve(cfg.estimators.size());
  for (const std::string& id : cfg.estimators)
    fns.emplace_back(id, make_estimator(parse_estimator_id(id), cfg.bayes));
  return run_study_custom(cfg, fns);
}

std::vector<SimCell> table3_lambdas() {
  std::vector<SimCell> cells;
  const double blocks[4][2] = {{0.1, 1.0}, {0.1, 10.0}, {5.0, 1.0}, {5.0, 10.0}};
  for (const auto& blk : blocks) {
    for (int n : {10, 30, 100}) {
      SimCell c;
      c.n = n;
      c.sigma_xi2 = blk[0];
      c.sigma2 = blk[1];
      c.lambda = (n - 1) * blk[0] / (2.0 * blk[1]);
      cells.push_back(c);
    }
  }
  return cells;
}

std::vector<SimResult> table4_suite(long long reps, std::uint64_t seed) {
  std::vector<SimResult> out;
  std::uint64_t cell_seed = seed;
  for (const SimCell& cell : table3_lambdas()) {
    SimConfig cfg;
    cfg.n = cell.n;
    cfg.r = 2;
    cfg.beta = -5.0;
    cfg.tau2 = 10.0;
    cfg.sigma2 = cell.sigma2;
    cfg.xi.mode = XiSpec::Mode::constant_fill;
    cfg.xi.value = std::sqrt(cell.sigma_xi2);
    cfg.reps = reps;
    cfg.seed = cell_seed++;
    cfg.estimators = {"ls", "tls", "br1", "tbr1", "gg", "tgg"};
    if (cell.n != 10) {
      cfg.estimators.insert(cfg.estimators.begin() + 4, "br5");
      cfg.estimators.insert(cfg.estimators.begin() + 5, "tbr5");
    }
    cfg.pairs = {{"tgg", "gg"}};
    out.push_back(run_study(cfg));
  }
  return out;
}

}  // namespace eiv::mc
