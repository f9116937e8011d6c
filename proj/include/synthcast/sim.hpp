#pragma once

// Monte Carlo study harness: data-generating process with random-walk level
// and coefficients over correlated covariates, two misspecified DLM agents,
// four combination methods (EW, BMA, Cp, BPS), MSFE scoring at checkpoints,
// and aggregation across replications.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "synthcast/bps.hpp"
#include "synthcast/combine.hpp"
#include "synthcast/dlm.hpp"

namespace synthcast {

// Shock scales are variances; the defaults square the quoted 0.01-level
// standard deviations (the scale on which the reference MSFE magnitudes are
// actually attainable: with 0.01 as a variance, the one-step noise floor
// alone would exceed them several-fold).
struct DgpConfig {
  double noise_var = 1e-4;        // nu, omega_a, omega_theta, eps3
  double coef13 = 1.0 / 3.0;
  double coef23 = 1.0 / 5.0;
  double var1 = (0.01 * 2.0 / 3.0) * (0.01 * 2.0 / 3.0);
  double var2 = (0.01 * 4.0 / 5.0) * (0.01 * 4.0 / 5.0);
  double theta_init = 1.0;
  double a_init = 0.0;
  int burn = 50;
  int total_after_burn = 350;

  void validate() const {
    if (noise_var < 0.0 || var1 < 0.0 || var2 < 0.0)
      throw std::invalid_argument("DgpConfig: variances must be >= 0");
    if (burn < 0 || total_after_burn < 1)
      throw std::invalid_argument("DgpConfig: bad lengths");
  }
};

struct SimPath {
  std::vector<double> y, xi1, xi2, xi3, a;
  Eigen::MatrixXd theta_dgp;  // N x 3

  int size() const { return static_cast<int>(y.size()); }
};

// y_t = a_t + sum_i theta_{ti} xi_{ti} + nu; a and theta are independent
// random walks; xi1, xi2 load on xi3 so the covariates are correlated. The
// first `burn` samples are discarded to randomize the starting point.
inline SimPath generate_path(const DgpConfig& cfg, RandomStream& stream) {
  cfg.validate();
  const int total = cfg.burn + cfg.total_after_burn;
  SimPath path;
  path.y.resize(cfg.total_after_burn);
  path.xi1.resize(cfg.total_after_burn);
  path.xi2.resize(cfg.total_after_burn);
  path.xi3.resize(cfg.total_after_burn);
  path.a.resize(cfg.total_after_burn);
  path.theta_dgp.resize(cfg.total_after_burn, 3);

  double a = cfg.a_init;
  double th[3] = {cfg.theta_init, cfg.theta_init, cfg.theta_init};
  for (int t = 0; t < total; ++t) {
    a += sample_normal(stream, 0.0, cfg.noise_var);
    for (int i = 0; i < 3; ++i) th[i] += sample_normal(stream, 0.0, cfg.noise_var);
    double xi3 = sample_normal(stream, 0.0, cfg.noise_var);
    double xi1 = cfg.coef13 * xi3 + sample_normal(stream, 0.0, cfg.var1);
    double xi2 = cfg.coef23 * xi3 + sample_normal(stream, 0.0, cfg.var2);
    double nu = sample_normal(stream, 0.0, cfg.noise_var);
    double y = a + th[0] * xi1 + th[1] * xi2 + th[2] * xi3 + nu;
    int k = t - cfg.burn;
    if (k >= 0) {
      path.a[k] = a;
      path.theta_dgp(k, 0) = th[0];
      path.theta_dgp(k, 1) = th[1];
      path.theta_dgp(k, 2) = th[2];
      path.xi1[k] = xi1;
      path.xi2[k] = xi2;
      path.xi3[k] = xi3;
      path.y[k] = y;
    }
  }
  return path;
}

struct AgentConfig {
  double n0 = 2.0;
  double s0 = 0.01;
  // state discount 0.99, volatility discount 0.95: of the two possible
  // symbol-to-role assignments this is the one that reproduces the reference
  // error magnitudes
  Discounts discounts{0.99, 0.95};
};

struct ReplicationConfig {
  DgpConfig dgp;
  AgentConfig agent;
  BpsConfig bps;
  Protocol protocol = Protocol::warm_start;
  int agent_training = 50;  // points seen before the first scored forecast
  int bps_training = 25;    // trailing part of the training window BPS sees
  bool run_bps = true;
  bool keep_traces = false;
};

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"EW", "BMA", "Cp", "BPS"};
  return names;
}

struct ReplicationResult {
  std::vector<double> realized;                 // scored targets
  std::vector<std::vector<double>> forecasts;   // [method][forecast index]
  Eigen::MatrixXd bma_weights;                  // per origin, J columns
  Eigen::MatrixXd cp_weights;
  Eigen::MatrixXd bps_coefs;                    // per origin, J+1 columns
};

// Streams consumed by one replication; role-partitioned so parallel
// replications never share a stream.
inline RandomStream replication_stream(std::uint64_t master_seed, int rep_id,
                                       int role) {
  return RandomStream(master_seed,
                      (static_cast<std::uint64_t>(rep_id) << 3) |
                          static_cast<std::uint64_t>(role));
}

namespace detail {

// Baselines at one origin share the same agent panel.
struct BaselineState {
  BmaScoreState bma;
  std::vector<std::vector<double>> past_points;  // [agent][t]
  std::vector<double> past_realized;
};

}  // namespace detail

// One full replication: agents see (y, xi1) and (y, xi2) only; EW/BMA/Cp
// pool the agents' point forecasts; BPS synthesizes their densities. All
// methods are scored against the same realized values.
inline ReplicationResult run_replication(int rep_id, const ReplicationConfig& cfg,
                                         std::uint64_t master_seed) {
  cfg.dgp.validate();
  cfg.bps.validate();
  RandomStream dgp_stream = replication_stream(master_seed, rep_id, 0);
  SimPath path = generate_path(cfg.dgp, dgp_stream);
  const int N = path.size();
  const int first_origin = cfg.agent_training;  // forecast indices [first_origin, N)
  if (N <= first_origin + 1)
    throw std::invalid_argument("run_replication: series too short");

  // Agents filter over the full span; their t-th forecast is made at t-1.
  NigState agent_prior;
  agent_prior.m = Eigen::VectorXd::Zero(2);
  agent_prior.C = Eigen::MatrixXd::Identity(2, 2);
  agent_prior.n = cfg.agent.n0;
  agent_prior.s = cfg.agent.s0;
  AgentRun a1 = run_agent(path.y, path.xi1, agent_prior, cfg.agent.discounts);
  AgentRun a2 = run_agent(path.y, path.xi2, agent_prior, cfg.agent.discounts);
  const int J = 2;
  ForecastPanel panel(N, J);
  for (int t = 0; t < N; ++t) {
    panel.at(t, 0) = a1.forecasts[t];
    panel.at(t, 1) = a2.forecasts[t];
  }

  const int n_forecasts = N - first_origin;
  ReplicationResult out;
  out.realized.assign(path.y.begin() + first_origin, path.y.end());
  out.forecasts.assign(4, std::vector<double>(n_forecasts, 0.0));
  if (cfg.keep_traces) {
    out.bma_weights.resize(n_forecasts, J);
    out.cp_weights.resize(n_forecasts, J);
    out.bps_coefs.resize(n_forecasts, J + 1);
  }

  // Baselines, sequentially over origins. Scores and windows accumulate from
  // the first available forecast.
  BmaScoreState bma_state(J);
  std::vector<std::vector<double>> past_points(J);
  std::vector<double> past_realized;
  const std::vector<int> k_dims(J, 2);  // intercept + one covariate each
  WeightVector ew = equal_weights(J);
  for (int t = 0; t < N; ++t) {
    if (t >= first_origin) {
      const int idx = t - first_origin;
      std::vector<double> locs(J);
      for (int j = 0; j < J; ++j) locs[j] = panel.at(t, j).location;

      out.forecasts[0][idx] = pool_point(ew, locs);

      WeightVector bma_w = bma_current_weights(bma_state);
      out.forecasts[1][idx] = pool_point(bma_w, locs);

      double sigma2 = 0.0;
      {
        double best = -1.0;
        for (int j = 0; j < J; ++j) {
          double sse = 0.0;
          for (size_t s = 0; s < past_realized.size(); ++s) {
            double e = past_realized[s] - past_points[j][s];
            sse += e * e;
          }
          if (best < 0.0 || sse < best) best = sse;
        }
        sigma2 = past_realized.empty() ? 0.0 : best / past_realized.size();
      }
      WeightVector cp_w = mallows_weights(past_points, past_realized, k_dims, sigma2);
      out.forecasts[2][idx] = pool_point(cp_w, locs);

      if (cfg.keep_traces) {
        for (int j = 0; j < J; ++j) {
          out.bma_weights(idx, j) = bma_w.w[j];
          out.cp_weights(idx, j) = cp_w.w[j];
        }
      }
    }
    // after observing y_t, update scores and windows
    std::vector<double> logp(J);
    for (int j = 0; j < J; ++j) {
      logp[j] = student_t_logpdf(path.y[t], panel.at(t, j));
      past_points[j].push_back(panel.at(t, j).location);
    }
    bma_state = bma_update(bma_state, logp).state;
    past_realized.push_back(path.y[t]);
  }

  // BPS over the window starting where its training segment begins.
  if (cfg.run_bps) {
    const int start = first_origin - cfg.bps_training;
    if (start < 0) throw std::invalid_argument("run_replication: bps_training too long");
    std::vector<double> y_bps(path.y.begin() + start, path.y.end());
    ForecastPanel panel_bps(N - start, J);
    std::copy(panel.cell.begin() + static_cast<size_t>(start) * J,
              panel.cell.end(), panel_bps.cell.begin());
    RandomStream bps_stream = replication_stream(master_seed, rep_id, 1);
    SequentialBpsResult seq = sequential_bps(y_bps, panel_bps, cfg.bps,
                                             cfg.protocol, bps_stream,
                                             cfg.bps_training);
    if (static_cast<int>(seq.points.size()) != n_forecasts)
      throw std::logic_error("run_replication: BPS forecast count mismatch");
    out.forecasts[3] = seq.points;
    if (cfg.keep_traces) out.bps_coefs = seq.coef_means;
  }

  return out;
}

inline std::vector<ReplicationResult> run_replications(
    int reps, const ReplicationConfig& cfg, std::uint64_t master_seed,
    int threads = 1) {
  if (reps < 1) throw std::invalid_argument("run_replications: reps must be >= 1");
  std::vector<ReplicationResult> out(reps);
  threads = std::max(1, std::min(threads, reps));
  if (threads == 1) {
    for (int r = 0; r < reps; ++r) out[r] = run_replication(r, cfg, master_seed);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int r = next.fetch_add(1);
        if (r >= reps) return;
        out[r] = run_replication(r, cfg, master_seed);
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

struct MsfeReport {
  std::vector<int> checkpoints;                     // forecast-window indices
  std::vector<std::vector<double>> msfe;            // [method][checkpoint]
  std::vector<std::vector<double>> ratio_pct;       // 100 * BPS / method
  // per-replication ratios for the spread plots: [rep][method][checkpoint]
  std::vector<std::vector<std::vector<double>>> rep_ratio_pct;
};

inline double msfe_through(const std::vector<double>& forecast,
                           const std::vector<double>& realized, int upto) {
  upto = std::min<int>(upto, static_cast<int>(realized.size()));
  if (upto < 1) throw std::invalid_argument("msfe_through: empty window");
  double acc = 0.0;
  for (int i = 0; i < upto; ++i) {
    double e = realized[i] - forecast[i];
    acc += e * e;
  }
  return acc / upto;
}

inline MsfeReport aggregate(const std::vector<ReplicationResult>& reps,
                            std::vector<int> checkpoints = {100, 200, 300}) {
  if (reps.empty()) throw std::invalid_argument("aggregate: no replications");
  const int n_methods = 4;
  const int n_cp = static_cast<int>(checkpoints.size());
  MsfeReport rpt;
  rpt.checkpoints = checkpoints;
  rpt.msfe.assign(n_methods, std::vector<double>(n_cp, 0.0));
  rpt.ratio_pct.assign(n_methods, std::vector<double>(n_cp, 0.0));
  rpt.rep_ratio_pct.resize(reps.size());

  std::vector<std::vector<std::vector<double>>> per_rep(reps.size());
  for (size_t r = 0; r < reps.size(); ++r) {
    per_rep[r].assign(n_methods, std::vector<double>(n_cp, 0.0));
    for (int m = 0; m < n_methods; ++m)
      for (int c = 0; c < n_cp; ++c)
        per_rep[r][m][c] =
            msfe_through(reps[r].forecasts[m], reps[r].realized, checkpoints[c]);
    for (int m = 0; m < n_methods; ++m)
      for (int c = 0; c < n_cp; ++c)
        rpt.msfe[m][c] += per_rep[r][m][c] / reps.size();
    rpt.rep_ratio_pct[r].assign(n_methods, std::vector<double>(n_cp, 0.0));
    for (int m = 0; m < n_methods; ++m)
      for (int c = 0; c < n_cp; ++c)
        rpt.rep_ratio_pct[r][m][c] =
            100.0 * per_rep[r][3][c] / per_rep[r][m][c];
  }
  for (int m = 0; m < n_methods; ++m)
    for (int c = 0; c < n_cp; ++c)
      rpt.ratio_pct[m][c] = 100.0 * rpt.msfe[3][c] / rpt.msfe[m][c];
  return rpt;
}

}  // namespace synthcast
