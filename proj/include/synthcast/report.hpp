#pragma once

// Output writers for the harness (MSFE report, per-replication ratios,
// coefficient traces, JSON run summary) and the three theory experiment
// drivers shared by the CLI and the integration suite.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthcast/config.hpp"
#include "synthcast/csv.hpp"
#include "synthcast/sim.hpp"
#include "synthcast/theory.hpp"

namespace synthcast {

inline void write_msfe_report(const std::string& dir, const MsfeReport& rpt) {
  CsvWriter csv(dir + "/msfe_report.csv",
                {"method", "checkpoint", "msfe", "ratio_vs_bps_pct"});
  for (size_t m = 0; m < method_names().size(); ++m)
    for (size_t c = 0; c < rpt.checkpoints.size(); ++c)
      csv.row(method_names()[m], rpt.checkpoints[c], rpt.msfe[m][c],
              rpt.ratio_pct[m][c]);
}

inline void write_ratios_by_rep(const std::string& dir, const MsfeReport& rpt) {
  CsvWriter csv(dir + "/ratios_by_rep.csv",
                {"rep", "method", "checkpoint", "ratio"});
  for (size_t r = 0; r < rpt.rep_ratio_pct.size(); ++r)
    for (size_t m = 0; m < method_names().size(); ++m)
      for (size_t c = 0; c < rpt.checkpoints.size(); ++c)
        csv.row(static_cast<int>(r), method_names()[m], rpt.checkpoints[c],
                rpt.rep_ratio_pct[r][m][c]);
}

// Coefficient trajectories of one replication, both as a single combined
// file and split per method.
inline void write_trace_files(const std::string& dir, int rep_id,
                              const ReplicationResult& rep) {
  const int n = static_cast<int>(rep.realized.size());
  const std::string stem = dir + "/coeff_trace_rep" + std::to_string(rep_id);
  auto write_rows = [&](CsvWriter& csv, const std::string& method) {
    for (int t = 0; t < n; ++t) {
      if (method == "BMA") {
        csv.row(t + 1, method, "agent1", rep.bma_weights(t, 0));
        csv.row(t + 1, method, "agent2", rep.bma_weights(t, 1));
      } else if (method == "Cp") {
        csv.row(t + 1, method, "agent1", rep.cp_weights(t, 0));
        csv.row(t + 1, method, "agent2", rep.cp_weights(t, 1));
      } else {
        csv.row(t + 1, method, "intercept", rep.bps_coefs(t, 0));
        csv.row(t + 1, method, "agent1", rep.bps_coefs(t, 1));
        csv.row(t + 1, method, "agent2", rep.bps_coefs(t, 2));
      }
    }
  };
  const std::vector<std::string> header = {"t", "method", "coefficient_name",
                                           "value"};
  std::vector<std::string> methods = {"BMA", "Cp"};
  if (rep.bps_coefs.rows() == n) methods.push_back("BPS");
  {
    CsvWriter combined(stem + ".csv", header);
    for (const auto& m : methods) write_rows(combined, m);
  }
  for (const auto& m : methods) {
    CsvWriter per(stem + "_" + (m == "Cp" ? "cp" : m == "BMA" ? "bma" : "bps") +
                      ".csv",
                  header);
    write_rows(per, m);
  }
}

inline void write_summary_json(const std::string& dir, const RunConfig& cfg,
                               double wall_seconds,
                               const std::string& extra_note = "") {
  nlohmann::json j;
  j["master_seed"] = cfg.master_seed;
  j["replications"] = cfg.replications;
  j["threads"] = cfg.threads;
  j["protocol"] = cfg.rep.protocol == Protocol::warm_start ? "warm" : "full";
  j["output_dir"] = cfg.output_dir;
  j["config_ini"] = render_config(cfg);
#ifdef SYNTHCAST_GIT_DESCRIBE
  j["git_describe"] = SYNTHCAST_GIT_DESCRIBE;
#else
  j["git_describe"] = "unknown";
#endif
  j["wall_time_seconds"] = wall_seconds;
  if (!extra_note.empty()) j["note"] = extra_note;
  std::ofstream out(dir + "/summary.json", std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Theory experiment drivers
// ---------------------------------------------------------------------------

struct Theorem2ExperimentOptions {
  std::uint64_t seed = 20240101;
  long n_main = 1000000;     // samples for the reference configuration
  int n_random_configs = 100;
  long n_random = 100000;    // samples per random configuration
};

struct Theorem2Experiment {
  bool pass = false;
  Theorem2Result reference;       // mu = 0.5, mu1 = mu2 = 0
  Theorem2Result martingale;      // mu = mu1 = mu2 = 0
  std::vector<ToyModelConfig> configs;
  std::vector<Theorem2Result> results;
};

inline Theorem2Experiment run_theorem2_experiment(
    const Theorem2ExperimentOptions& opt) {
  Theorem2Experiment out;

  ToyModelConfig ref;
  ref.mu = 0.5;
  ref.mu1 = 0.0;
  ref.mu2 = 0.0;
  ref.n_samples = opt.n_main;
  RandomStream ref_stream(opt.seed, 0);
  out.reference = theorem2_gap(ref, ref_stream);

  ToyModelConfig mart = ref;
  mart.mu = 0.0;
  RandomStream mart_stream(opt.seed, 1);
  out.martingale = theorem2_gap(mart, mart_stream);

  RandomStream cfg_stream(opt.seed, 2);
  bool all_ok = true;
  for (int i = 0; i < opt.n_random_configs; ++i) {
    ToyModelConfig c;
    c.mu = -1.0 + 2.0 * cfg_stream.uniform01();
    c.mu1 = -1.0 + 2.0 * cfg_stream.uniform01();
    c.mu2 = -1.0 + 2.0 * cfg_stream.uniform01();
    c.n_samples = opt.n_random;
    RandomStream s(opt.seed, 10 + i);
    Theorem2Result r = theorem2_gap(c, s);
    all_ok = all_ok && (r.gap >= -3.0 * r.se_pooled);
    out.configs.push_back(c);
    out.results.push_back(r);
  }

  bool ref_ok = std::fabs(out.reference.gap - 0.25) < 0.01 &&
                std::fabs(out.reference.mse_linear - 1.25) < 0.05 &&
                std::fabs(out.reference.mse_with_intercept - 1.0) < 0.05;
  bool mart_ok = std::fabs(out.martingale.gap) < 3.0 * out.martingale.se_pooled;
  out.pass = all_ok && ref_ok && mart_ok;
  return out;
}

inline void write_theorem2_csv(const std::string& dir,
                               const Theorem2Experiment& ex) {
  CsvWriter csv(dir + "/theorem2_gap.csv",
                {"config", "mu", "mu1", "mu2", "n_samples", "mse_linear",
                 "mse_with_intercept", "gap", "se_pooled"});
  auto row = [&](const std::string& label, const ToyModelConfig& c,
                 const Theorem2Result& r) {
    csv.row(label, c.mu, c.mu1, c.mu2, static_cast<long>(c.n_samples),
            r.mse_linear, r.mse_with_intercept, r.gap, r.se_pooled);
  };
  ToyModelConfig ref;
  ref.mu = 0.5;
  row("reference", ref, ex.reference);
  ToyModelConfig mart;
  mart.mu = 0.0;
  row("martingale", mart, ex.martingale);
  for (size_t i = 0; i < ex.configs.size(); ++i)
    row("random" + std::to_string(i), ex.configs[i], ex.results[i]);
}

struct Lemma2ExperimentOptions {
  std::uint64_t seed = 20240101;
  int n_paths = 500;
  int horizon = 20;
};

struct Lemma2Experiment {
  bool pass = false;
  std::vector<ParameterShift> shifts;
  std::vector<RiskEstimate> rw_risks;        // random-walk state predictor
  std::vector<RiskEstimate> stationary_risks;
  double rw_max_sigma = 0.0;         // max pairwise |diff| / pooled se
  double stationary_max_sigma = 0.0;
};

inline Lemma2Experiment run_lemma2_experiment(const Lemma2ExperimentOptions& opt) {
  Lemma2Experiment out;
  Eigen::VectorXd t0(2), t1(2), t2(2);
  t0 << 0.0, 0.0;
  t1 << 2.0, -1.0;
  t2 << 0.5, 1.5;
  out.shifts = {{0.0, t0}, {1.0, t1}, {-0.5, t2}};

  KlRiskConfig cfg;
  cfg.n_paths = opt.n_paths;
  cfg.horizon = opt.horizon;

  KalmanPredictorConfig rw;  // diffuse prior, random-walk state
  KalmanPredictorConfig stat = rw;
  stat.state_coef = 0.5;

  out.rw_risks = lemma2_constancy(out.shifts, kalman_predictor(rw), cfg, opt.seed);
  out.stationary_risks =
      lemma2_constancy(out.shifts, kalman_predictor(stat), cfg, opt.seed);

  auto max_sigma = [](const std::vector<RiskEstimate>& risks) {
    double worst = 0.0;
    for (size_t i = 0; i < risks.size(); ++i)
      for (size_t j = i + 1; j < risks.size(); ++j) {
        double pooled = std::sqrt(risks[i].std_error * risks[i].std_error +
                                  risks[j].std_error * risks[j].std_error);
        worst = std::max(worst, std::fabs(risks[i].value - risks[j].value) / pooled);
      }
    return worst;
  };
  out.rw_max_sigma = max_sigma(out.rw_risks);
  out.stationary_max_sigma = max_sigma(out.stationary_risks);
  out.pass = out.rw_max_sigma < 3.0 && out.stationary_max_sigma > 3.0;
  return out;
}

inline void write_lemma2_csv(const std::string& dir, const Lemma2Experiment& ex) {
  CsvWriter csv(dir + "/lemma2_risks.csv",
                {"predictor", "shift_a", "shift_theta1", "shift_theta2",
                 "n_paths", "risk", "std_error"});
  for (size_t i = 0; i < ex.shifts.size(); ++i) {
    csv.row("random_walk", ex.shifts[i].a, ex.shifts[i].theta(0),
            ex.shifts[i].theta(1), ex.rw_risks[i].n_paths, ex.rw_risks[i].value,
            ex.rw_risks[i].std_error);
  }
  for (size_t i = 0; i < ex.shifts.size(); ++i) {
    csv.row("stationary", ex.shifts[i].a, ex.shifts[i].theta(0),
            ex.shifts[i].theta(1), ex.stationary_risks[i].n_paths,
            ex.stationary_risks[i].value, ex.stationary_risks[i].std_error);
  }
}

struct Corollary2ExperimentOptions {
  std::uint64_t seed = 20240101;
  std::vector<double> sigmas = {1.0, 10.0, 100.0, 1e4, 1e6};
  int horizon = 10;
};

struct Corollary2Experiment {
  bool pass = false;
  std::vector<double> sigmas;
  std::vector<double> sup_diffs;
};

inline Corollary2Experiment run_corollary2_experiment(
    const Corollary2ExperimentOptions& opt) {
  Corollary2Experiment out;
  out.sigmas = opt.sigmas;
  RandomStream stream(opt.seed, 0);
  Eigen::VectorXd theta(2);
  theta << 1.0, -0.5;
  ObservedPath path = simulate_observed_path(0.3, theta, opt.horizon, 1.0, stream);
  KalmanPredictorConfig base;
  out.sup_diffs = corollary2_convergence(opt.sigmas, path, base);
  bool monotone = true;
  for (size_t i = 1; i < out.sup_diffs.size(); ++i)
    monotone = monotone && out.sup_diffs[i] <= out.sup_diffs[i - 1] + 1e-12;
  out.pass = monotone;
  return out;
}

inline void write_corollary2_csv(const std::string& dir,
                                 const Corollary2Experiment& ex) {
  CsvWriter csv(dir + "/corollary2_curve.csv", {"sigma", "sup_abs_diff"});
  for (size_t i = 0; i < ex.sigmas.size(); ++i)
    csv.row(ex.sigmas[i], ex.sup_diffs[i]);
}

}  // namespace synthcast
