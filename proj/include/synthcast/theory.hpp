#pragma once

// Desk-scale numerical checks of the stochastic-process claims: optimal
// linear weights vs. an added intercept on a drifting toy system, KL-risk
// shift-constancy of the diffuse-prior random-walk predictor, and the
// proper-prior to diffuse-prior predictive convergence.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "synthcast/dist.hpp"
#include "synthcast/rng.hpp"

namespace synthcast {

// Unconstrained least-squares weights from raw second moments:
//   w = (sum dx dx')^{-1} (sum dx dy).
inline Eigen::VectorXd optimal_linear_weights(const Eigen::MatrixXd& dx,
                                              const Eigen::VectorXd& dy) {
  if (dx.rows() != dy.size())
    throw std::invalid_argument("optimal_linear_weights: sample count mismatch");
  if (dx.rows() < dx.cols())
    throw std::invalid_argument("optimal_linear_weights: fewer samples than weights");
  Eigen::MatrixXd M = dx.transpose() * dx;
  Eigen::VectorXd b = dx.transpose() * dy;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw std::runtime_error(
        "optimal_linear_weights: second-moment matrix is singular or "
        "ill-conditioned (condition number >= 1e12)");
  return M.ldlt().solve(b);
}

// Drifting target observed through two drifting agents:
//   dy = mu + dxi1 + dxi2 + dxi3,  dx_j = mu_j + dxi_j,
// with independent unit-variance increments at step dt.
struct ToyModelConfig {
  double mu = 0.5;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double step = 1.0;
  long n_samples = 1000000;

  void validate() const {
    if (n_samples < 1000)
      throw std::invalid_argument("ToyModelConfig: n_samples must be >= 10^3");
    if (!(step > 0.0)) throw std::invalid_argument("ToyModelConfig: step must be > 0");
  }
};

struct Theorem2Result {
  double mse_linear = 0.0;
  double mse_with_intercept = 0.0;
  double gap = 0.0;
  double se_linear = 0.0;
  double se_with_intercept = 0.0;
  double se_pooled = 0.0;
  double intercept = 0.0;  // estimated mean residual
  Eigen::VectorXd weights;
};

// Estimates the squared-error cost of the best linear weights with and
// without a freely chosen intercept on the toy system.
inline Theorem2Result theorem2_gap(const ToyModelConfig& cfg, RandomStream& stream) {
  cfg.validate();
  const long N = cfg.n_samples;
  const double sd = std::sqrt(cfg.step);
  Eigen::MatrixXd dx(N, 2);
  Eigen::VectorXd dy(N);
  for (long i = 0; i < N; ++i) {
    double w1 = sd * stream.normal();
    double w2 = sd * stream.normal();
    double w3 = sd * stream.normal();
    dx(i, 0) = cfg.mu1 * cfg.step + w1;
    dx(i, 1) = cfg.mu2 * cfg.step + w2;
    dy(i) = cfg.mu * cfg.step + w1 + w2 + w3;
  }
  Theorem2Result out;
  out.weights = optimal_linear_weights(dx, dy);
  Eigen::VectorXd resid = dy - dx * out.weights;
  out.intercept = resid.mean();

  double s2 = 0.0, s2c = 0.0, m2 = 0.0, m2c = 0.0;
  for (long i = 0; i < N; ++i) {
    double r = resid(i);
    double rc = r - out.intercept;
    m2 += r * r;
    m2c += rc * rc;
  }
  m2 /= N;
  m2c /= N;
  for (long i = 0; i < N; ++i) {
    double r = resid(i);
    double rc = r - out.intercept;
    double d1 = r * r - m2;
    double d2 = rc * rc - m2c;
    s2 += d1 * d1;
    s2c += d2 * d2;
  }
  out.mse_linear = m2;
  out.mse_with_intercept = m2c;
  out.gap = m2 - m2c;
  out.se_linear = std::sqrt(s2 / N / N);
  out.se_with_intercept = std::sqrt(s2c / N / N);
  out.se_pooled = std::sqrt(out.se_linear * out.se_linear +
                            out.se_with_intercept * out.se_with_intercept);
  return out;
}

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

// A one-step transition density with enough structure for quadrature.
struct TransitionDensity {
  double mean = 0.0;
  double sd = 1.0;
  std::function<double(double)> logpdf;
};

inline TransitionDensity normal_transition(double mean, double var) {
  TransitionDensity d;
  d.mean = mean;
  d.sd = std::sqrt(var);
  d.logpdf = [mean, var](double yv) { return normal_logpdf(yv, mean, var); };
  return d;
}

// KL(p || q) by trapezoid quadrature on a grid spanning +-8 predictive sd,
// widened and retried if the truth keeps mass outside the grid.
inline double kl_quadrature(const TransitionDensity& p, const TransitionDensity& q,
                            int n_points = 2001) {
  double half_width = 8.0 * std::max(p.sd, q.sd);
  for (int attempt = 0; attempt < 4; ++attempt) {
    double lo = p.mean - half_width;
    double hi = p.mean + half_width;
    double tail = normal_cdf(lo, p.mean, p.sd * p.sd) +
                  (1.0 - normal_cdf(hi, p.mean, p.sd * p.sd));
    if (tail > 1e-8) {
      half_width *= 2.0;
      continue;
    }
    const double h = (hi - lo) / (n_points - 1);
    double acc = 0.0;
    for (int i = 0; i < n_points; ++i) {
      double yv = lo + h * i;
      double lp = p.logpdf(yv);
      double val = std::exp(lp) * (lp - q.logpdf(yv));
      acc += (i == 0 || i == n_points - 1) ? 0.5 * val : val;
    }
    return acc * h;
  }
  throw std::runtime_error("kl_quadrature: grid does not capture the density");
}

// Predictor interface: after seeing increments z_1..z_T against regressor
// rows (1, dx_t), produce the one-step transition density for z_{T+1} given
// the next regressor row.
using SequentialPredictor = std::function<TransitionDensity(
    const Eigen::VectorXd& z, const Eigen::MatrixXd& dx, const Eigen::VectorXd& dx_next)>;

struct KalmanPredictorConfig {
  double prior_var = 1e12;   // diffuse prior realized as a wide proper normal
  double state_coef = 1.0;   // 1 = random walk; |.| < 1 = stationary AR(1)
  double evolution_var = 0.01;
  double obs_var = 1.0;
};

// Known-variance Kalman filter on regressors (1, dx_t) whose state carries
// the intercept and the agent loadings. Runs in information form: the
// evolution with isotropic W is an exact symmetric matrix function of the
// precision, so extremely wide priors stay cancellation-free and the
// proper-vs-diffuse density differences are resolved down to double
// precision.
//   precision:  L -> L (phi^2 I + w L)^{-1} L ... via the shared eigenbasis
//   info vec:   eta -> phi (phi^2 I + w L)^{-1} eta
//   update:     L += F F'/v,  eta += F z/v
inline SequentialPredictor kalman_predictor(const KalmanPredictorConfig& cfg) {
  return [cfg](const Eigen::VectorXd& z, const Eigen::MatrixXd& dx,
               const Eigen::VectorXd& dx_next) -> TransitionDensity {
    const int J = static_cast<int>(dx.cols());
    const int p = J + 1;
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(p, p) / cfg.prior_var;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(p);
    const double phi = cfg.state_coef;
    const double w = cfg.evolution_var;
    const double phi2 = phi * phi;
    Eigen::VectorXd F(p);

    auto evolve = [&]() {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prec);
      const Eigen::MatrixXd& Q = es.eigenvectors();
      Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0);
      Eigen::VectorXd gain = (phi2 + w * d.array()).inverse();
      prec = Q * (d.array() * gain.array()).matrix().asDiagonal() * Q.transpose();
      eta = Q * (phi * gain.array() * (Q.transpose() * eta).array()).matrix();
    };

    for (int t = 0; t < z.size(); ++t) {
      evolve();
      F(0) = 1.0;
      F.tail(J) = dx.row(t);
      prec.noalias() += F * F.transpose() / cfg.obs_var;
      eta.noalias() += F * (z(t) / cfg.obs_var);
    }
    evolve();
    F(0) = 1.0;
    F.tail(J) = dx_next;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(prec);
    double mean = F.dot(ldlt.solve(eta));
    double var = F.dot(ldlt.solve(F)) + cfg.obs_var;
    return normal_transition(mean, var);
  };
}

struct KlRiskConfig {
  int n_paths = 500;
  int horizon = 20;
  double obs_var = 1.0;
  int quad_points = 2001;
};

// Simulates histories z_t = a + <theta, dx_t> + eps_t with standard-normal
// regressor increments, then averages the per-path KL between the true
// one-step transition and the predictor's.
inline RiskEstimate kl_risk_mc(double a, const Eigen::VectorXd& theta,
                               const SequentialPredictor& predictor,
                               const KlRiskConfig& cfg, std::uint64_t master_seed,
                               std::uint64_t stream_offset = 0) {
  if (cfg.n_paths < 2) throw std::invalid_argument("kl_risk_mc: need >= 2 paths");
  const int J = static_cast<int>(theta.size());
  std::vector<double> kls(cfg.n_paths);
  for (int path = 0; path < cfg.n_paths; ++path) {
    RandomStream stream(master_seed, stream_offset + path);
    Eigen::MatrixXd dx(cfg.horizon, J);
    Eigen::VectorXd z(cfg.horizon);
    for (int t = 0; t < cfg.horizon; ++t) {
      for (int j = 0; j < J; ++j) dx(t, j) = stream.normal();
      z(t) = a + theta.dot(dx.row(t)) + std::sqrt(cfg.obs_var) * stream.normal();
    }
    Eigen::VectorXd dx_next(J);
    for (int j = 0; j < J; ++j) dx_next(j) = stream.normal();
    TransitionDensity truth = normal_transition(a + theta.dot(dx_next), cfg.obs_var);
    TransitionDensity pred = predictor(z, dx, dx_next);
    kls[path] = kl_quadrature(truth, pred, cfg.quad_points);
  }
  double mean = 0.0;
  for (double k : kls) mean += k;
  mean /= cfg.n_paths;
  double var = 0.0;
  for (double k : kls) var += (k - mean) * (k - mean);
  RiskEstimate out;
  out.value = mean;
  out.std_error = std::sqrt(var / cfg.n_paths / (cfg.n_paths - 1));
  out.n_paths = cfg.n_paths;
  return out;
}

struct ParameterShift {
  double a = 0.0;
  Eigen::VectorXd theta;
};

// Risk at each shift with common random numbers across shifts.
inline std::vector<RiskEstimate> lemma2_constancy(
    const std::vector<ParameterShift>& shifts, const SequentialPredictor& predictor,
    const KlRiskConfig& cfg, std::uint64_t master_seed) {
  if (shifts.empty()) throw std::invalid_argument("lemma2_constancy: no shifts");
  std::vector<RiskEstimate> out;
  out.reserve(shifts.size());
  for (const auto& sft : shifts)
    out.push_back(kl_risk_mc(sft.a, sft.theta, predictor, cfg, master_seed, 0));
  return out;
}

// Fixed observed path for the prior-convergence experiment.
struct ObservedPath {
  Eigen::VectorXd z;
  Eigen::MatrixXd dx;
  Eigen::VectorXd dx_next;
};

inline ObservedPath simulate_observed_path(double a, const Eigen::VectorXd& theta,
                                           int horizon, double obs_var,
                                           RandomStream& stream) {
  const int J = static_cast<int>(theta.size());
  ObservedPath path;
  path.z.resize(horizon);
  path.dx.resize(horizon, J);
  path.dx_next.resize(J);
  for (int t = 0; t < horizon; ++t) {
    for (int j = 0; j < J; ++j) path.dx(t, j) = stream.normal();
    path.z(t) = a + theta.dot(path.dx.row(t)) + std::sqrt(obs_var) * stream.normal();
  }
  for (int j = 0; j < J; ++j) path.dx_next(j) = stream.normal();
  return path;
}

// For each prior scale sigma, the sup over an evaluation grid of the
// absolute density difference between the sigma-prior predictive and the
// diffuse-prior predictive on one fixed path.
inline std::vector<double> corollary2_convergence(
    const std::vector<double>& sigma_grid, const ObservedPath& path,
    const KalmanPredictorConfig& base, int grid_points = 2001) {
  if (sigma_grid.empty())
    throw std::invalid_argument("corollary2_convergence: empty sigma grid");
  KalmanPredictorConfig diffuse_cfg = base;
  diffuse_cfg.prior_var = 1e12;
  TransitionDensity diffuse =
      kalman_predictor(diffuse_cfg)(path.z, path.dx, path.dx_next);
  std::vector<double> out;
  out.reserve(sigma_grid.size());
  for (double sigma : sigma_grid) {
    if (!(sigma > 0.0))
      throw std::invalid_argument("corollary2_convergence: sigma must be > 0");
    KalmanPredictorConfig cfg = base;
    cfg.prior_var = sigma * sigma;
    TransitionDensity qs = kalman_predictor(cfg)(path.z, path.dx, path.dx_next);
    double half_width = 8.0 * std::max(qs.sd, diffuse.sd);
    double lo = diffuse.mean - half_width;
    double h = 2.0 * half_width / (grid_points - 1);
    double sup = 0.0;
    for (int i = 0; i < grid_points; ++i) {
      double yv = lo + h * i;
      double diff = std::fabs(std::exp(qs.logpdf(yv)) - std::exp(diffuse.logpdf(yv)));
      sup = std::max(sup, diff);
    }
    out.push_back(sup);
  }
  return out;
}

}  // namespace synthcast
