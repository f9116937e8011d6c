#pragma once

// Bayesian predictive synthesis with a dynamic-linear-model synthesis
// function: a Gibbs sampler over latent agent values x_{1:T}, synthesis
// coefficients theta'_{0:T} (intercept + J agent loadings), and volatilities
// v_{1:T}, plus one-step-ahead predictive simulation and the sequential
// recalibration protocols.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "synthcast/dlm.hpp"

namespace synthcast {

// T x J panel of agent one-step predictive densities.
struct ForecastPanel {
  int T = 0;
  int J = 0;
  std::vector<ForecastDensity> cell;  // row-major

  ForecastPanel() = default;
  ForecastPanel(int T_, int J_) : T(T_), J(J_), cell(static_cast<size_t>(T_) * J_) {}

  ForecastDensity& at(int t, int j) { return cell[static_cast<size_t>(t) * J + j]; }
  const ForecastDensity& at(int t, int j) const {
    return cell[static_cast<size_t>(t) * J + j];
  }

  void validate() const {
    for (const auto& d : cell) {
      d.validate();
      if (!std::isfinite(d.location))
        throw std::invalid_argument("ForecastPanel: non-finite location");
    }
  }
};

struct BpsConfig {
  Eigen::VectorXd m0;         // empty means (0, 1/J, ..., 1/J)
  double c0 = 1.0;            // prior state scale: C0 = c0 * I
  double s0 = 0.002;
  double n0 = 10.0;
  Discounts discounts{0.95, 0.99};  // state discount 0.95, volatility 0.99
  int burn_in = 2000;
  int kept_draws = 3000;
  int warm_start_burn = 500;

  void validate() const {
    if (!(s0 > 0.0) || !(n0 > 0.0) || !(c0 > 0.0))
      throw std::invalid_argument("BpsConfig: scales must be > 0");
    if (burn_in < 0 || kept_draws < 1 || warm_start_burn < 0)
      throw std::invalid_argument("BpsConfig: bad MCMC sizes");
    discounts.validate();
  }

  Eigen::VectorXd effective_m0(int J) const {
    if (m0.size() > 0) {
      if (m0.size() != J + 1)
        throw std::invalid_argument("BpsConfig: m0 must have J+1 entries");
      return m0;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Constant(J + 1, 1.0 / J);
    v(0) = 0.0;
    return v;
  }
};

// Terminal-time quantities of each kept draw, everything one-step prediction
// needs: theta'_T, v_T, and the scale-free state covariance C_T / s_T.
struct TerminalDraws {
  int p = 0;
  int kept = 0;
  double n_T = 0.0;
  std::vector<double> theta;  // kept * p
  std::vector<double> v;      // kept
  std::vector<double> Cstar;  // kept * p * p

  void resize(int p_, int kept_) {
    p = p_;
    kept = kept_;
    theta.assign(static_cast<size_t>(kept) * p, 0.0);
    v.assign(kept, 0.0);
    Cstar.assign(static_cast<size_t>(kept) * p * p, 0.0);
  }
};

// Posterior MCMC draws of the synthesis states.
struct SynthesisDraws {
  int T = 0;
  int J = 0;
  int kept = 0;
  std::vector<double> theta;  // kept * (T+1) * (J+1), t = 0..T
  std::vector<double> v;      // kept * T, t = 1..T
  std::vector<double> x;      // kept * T * J, t = 1..T
  TerminalDraws terminals;

  int p() const { return J + 1; }

  double theta_at(int draw, int t, int i) const {
    return theta[(static_cast<size_t>(draw) * (T + 1) + t) * p() + i];
  }
  double v_at(int draw, int t) const {  // t = 1..T
    return v[static_cast<size_t>(draw) * T + (t - 1)];
  }
  double x_at(int draw, int t, int j) const {  // t = 1..T
    return x[(static_cast<size_t>(draw) * T + (t - 1)) * J + j];
  }

  // Posterior mean trajectory of theta', one row per t = 0..T.
  Eigen::MatrixXd coefficient_mean() const {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(T + 1, p());
    for (int d = 0; d < kept; ++d)
      for (int t = 0; t <= T; ++t)
        for (int i = 0; i < p(); ++i) mean(t, i) += theta_at(d, t, i);
    mean /= static_cast<double>(kept);
    return mean;
  }
};

namespace detail {

// Mean and precision of the conditional for x_t given (theta', v, lambda):
//   P = diag(lambda/q) + th th'/v,  b = diag(lambda/q) f + th (y - th0)/v,
// with th the agent loadings. Exposed for the dense-oracle conjugacy check.
struct XStepMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

inline XStepMoments x_step_moments(const Eigen::VectorXd& lambda,
                                   const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& f,
                                   const Eigen::VectorXd& loadings,
                                   double theta0, double v, double y) {
  const int J = static_cast<int>(lambda.size());
  XStepMoments out;
  out.precision = loadings * loadings.transpose() / v;
  Eigen::VectorXd b = loadings * ((y - theta0) / v);
  for (int j = 0; j < J; ++j) {
    double pr = lambda(j) / q(j);
    out.precision(j, j) += pr;
    b(j) += pr * f(j);
  }
  out.mean = out.precision.llt().solve(b);
  return out;
}

// One Gibbs sweep state with preallocated buffers.
struct GibbsWorkspace {
  int T = 0, J = 0, p = 0;
  std::vector<double> x;       // T * J latent agent values
  std::vector<double> lambda;  // T * J scale-mixture weights
  std::vector<double> Freg;    // T * p regressors (1, x_t)
  std::vector<double> theta;   // (T+1) * p
  std::vector<double> v;       // T+1
  FilterHistory hist;

  void resize(int T_, int J_) {
    T = T_;
    J = J_;
    p = J_ + 1;
    x.assign(static_cast<size_t>(T) * J, 0.0);
    lambda.assign(static_cast<size_t>(T) * J, 1.0);
    Freg.assign(static_cast<size_t>(T) * p, 0.0);
    theta.assign(static_cast<size_t>(T + 1) * p, 0.0);
    v.assign(T + 1, 0.0);
  }
};

// Runs burn + kept sweeps, handing each kept sweep to `sink`. The workspace
// carries the chain state, so a warm start is just "reuse the workspace and
// burn less".
template <typename Sink>
void gibbs_core(const double* y, int T, const ForecastPanel& h,
                const BpsConfig& cfg, int burn, RandomStream& stream,
                GibbsWorkspace& ws, Sink&& sink) {
  const int J = h.J;
  const int p = J + 1;
  NigState prior;
  prior.m = cfg.effective_m0(J);
  prior.C = Eigen::MatrixXd::Identity(p, p) * cfg.c0;
  prior.n = cfg.n0;
  prior.s = cfg.s0;
  const Discounts& d = cfg.discounts;

  const int sweeps = burn + cfg.kept_draws;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // (i) theta', v | x : filter on regressors (1, x_t), then FFBS
    for (int t = 0; t < T; ++t) {
      ws.Freg[static_cast<size_t>(t) * p] = 1.0;
      for (int j = 0; j < J; ++j)
        ws.Freg[static_cast<size_t>(t) * p + 1 + j] = ws.x[static_cast<size_t>(t) * J + j];
    }
    run_filter(y, ws.Freg.data(), T, p, prior, d, ws.hist);
    ffbs_sample(ws.hist, d, stream, ws.theta.data(), ws.v.data());

    // (ii) lambda | x : Student-t scale-mixture weights
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < J; ++j) {
        const ForecastDensity& hd = h.at(t, j);
        double e = ws.x[static_cast<size_t>(t) * J + j] - hd.location;
        ws.lambda[static_cast<size_t>(t) * J + j] =
            sample_gamma(stream, 0.5 * (hd.dof + 1.0),
                         0.5 * (hd.dof + e * e / hd.scale));
      }
    }

    // (iii) x | theta', v, lambda : J-dimensional normal in precision form
    double P[64 * 64];
    double L[64 * 64];
    double b[64];
    double z[64];
    double w[64];
    for (int t = 0; t < T; ++t) {
      const double* th = ws.theta.data() + static_cast<size_t>(t + 1) * p;
      const double vt = ws.v[t + 1];
      for (int i = 0; i < J; ++i) {
        for (int j = 0; j <= i; ++j) {
          double pij = th[1 + i] * th[1 + j] / vt;
          P[i * J + j] = pij;
          P[j * J + i] = pij;
        }
        const ForecastDensity& hd = h.at(t, i);
        double pr = ws.lambda[static_cast<size_t>(t) * J + i] / hd.scale;
        P[i * J + i] += pr;
        b[i] = pr * hd.location + th[1 + i] * (y[t] - th[0]) / vt;
      }
      cholesky_psd(J, P, L);
      // forward then backward solve for the mean, backward solve for the draw
      for (int i = 0; i < J; ++i) {
        double acc = b[i];
        for (int k = 0; k < i; ++k) acc -= L[i * J + k] * w[k];
        w[i] = acc / L[i * J + i];
      }
      for (int i = J - 1; i >= 0; --i) {
        double acc = w[i];
        for (int k = i + 1; k < J; ++k) acc -= L[k * J + i] * b[k];
        b[i] = acc / L[i * J + i];  // b now holds the conditional mean
      }
      for (int i = 0; i < J; ++i) z[i] = stream.normal();
      for (int i = J - 1; i >= 0; --i) {
        double acc = z[i];
        for (int k = i + 1; k < J; ++k) acc -= L[k * J + i] * w[k];
        w[i] = acc / L[i * J + i];  // w = L^{-T} z
      }
      for (int j = 0; j < J; ++j)
        ws.x[static_cast<size_t>(t) * J + j] = b[j] + w[j];
    }

    if (sweep >= burn) sink(ws);
  }
}

inline void init_x_at_prior_locations(const ForecastPanel& h, GibbsWorkspace& ws) {
  for (int t = 0; t < ws.T; ++t)
    for (int j = 0; j < ws.J; ++j)
      ws.x[static_cast<size_t>(t) * ws.J + j] = h.at(t, j).location;
}

inline void record_terminals(const GibbsWorkspace& ws, int slot,
                             TerminalDraws& term) {
  const int p = ws.p;
  const int T = ws.T;
  const double* thT = ws.theta.data() + static_cast<size_t>(T) * p;
  std::copy(thT, thT + p, term.theta.begin() + static_cast<size_t>(slot) * p);
  term.v[slot] = ws.v[T];
  const double* CT = ws.hist.C.data() + static_cast<size_t>(T) * p * p;
  const double sT = ws.hist.s[T];
  double* dst = term.Cstar.data() + static_cast<size_t>(slot) * p * p;
  for (int i = 0; i < p * p; ++i) dst[i] = CT[i] / sT;
  term.n_T = ws.hist.n[T];
}

}  // namespace detail

// Full Gibbs run: alternates the three conditional draws until
// burn_in + kept_draws sweeps, storing every kept sweep.
inline SynthesisDraws gibbs_run(const std::vector<double>& y,
                                const ForecastPanel& h, const BpsConfig& cfg,
                                RandomStream& stream) {
  cfg.validate();
  h.validate();
  const int T = static_cast<int>(y.size());
  if (T < 2) throw std::invalid_argument("gibbs_run: need T >= 2");
  if (h.T != T) throw std::invalid_argument("gibbs_run: panel/series misaligned");
  for (double yt : y)
    if (!std::isfinite(yt)) throw std::invalid_argument("gibbs_run: non-finite y");
  const int J = h.J;
  const int p = J + 1;

  SynthesisDraws out;
  out.T = T;
  out.J = J;
  out.kept = cfg.kept_draws;
  out.theta.resize(static_cast<size_t>(cfg.kept_draws) * (T + 1) * p);
  out.v.resize(static_cast<size_t>(cfg.kept_draws) * T);
  out.x.resize(static_cast<size_t>(cfg.kept_draws) * T * J);
  out.terminals.resize(p, cfg.kept_draws);

  detail::GibbsWorkspace ws;
  ws.resize(T, J);
  detail::init_x_at_prior_locations(h, ws);

  int slot = 0;
  detail::gibbs_core(y.data(), T, h, cfg, cfg.burn_in, stream, ws,
                     [&](const detail::GibbsWorkspace& w) {
                       std::copy(w.theta.begin(), w.theta.end(),
                                 out.theta.begin() +
                                     static_cast<size_t>(slot) * (T + 1) * p);
                       std::copy(w.v.begin() + 1, w.v.end(),
                                 out.v.begin() + static_cast<size_t>(slot) * T);
                       std::copy(w.x.begin(), w.x.end(),
                                 out.x.begin() + static_cast<size_t>(slot) * T * J);
                       detail::record_terminals(w, slot, out.terminals);
                       ++slot;
                     });
  return out;
}

struct PredictResult {
  double point = 0.0;
  std::vector<double> samples;
};

// One-step-ahead predictive simulation: per kept draw, evolve the volatility
// by the beta-discount step, evolve theta' through the discount-implied
// W = Cstar (1-delta)/delta, draw agent values from their densities, and
// emit a y draw. The point forecast is the sample mean.
inline PredictResult predict_next(const TerminalDraws& term,
                                  const std::vector<ForecastDensity>& h_next,
                                  const Discounts& d, RandomStream& stream) {
  d.validate();
  if (term.kept < 1) throw std::invalid_argument("predict_next: empty draws");
  const int p = term.p;
  const int J = p - 1;
  if (static_cast<int>(h_next.size()) != J)
    throw std::invalid_argument("predict_next: h_next size mismatch");
  for (const auto& hd : h_next) hd.validate();

  PredictResult out;
  out.samples.resize(term.kept);
  const double w_scale = (1.0 - d.delta) / d.delta;
  double L[64 * 64];
  double th[64];
  double acc = 0.0;
  for (int i = 0; i < term.kept; ++i) {
    double v_next = term.v[i];
    if (d.beta < 1.0) {
      double g = sample_beta(stream, 0.5 * d.beta * term.n_T,
                             0.5 * (1.0 - d.beta) * term.n_T);
      v_next = term.v[i] * d.beta / g;
    }
    const double* th_T = term.theta.data() + static_cast<size_t>(i) * p;
    for (int r = 0; r < p; ++r) th[r] = th_T[r];
    if (w_scale > 0.0) {
      detail::cholesky_psd(p, term.Cstar.data() + static_cast<size_t>(i) * p * p, L);
      double sq = std::sqrt(w_scale * v_next);
      double z[64];
      for (int r = 0; r < p; ++r) z[r] = stream.normal();
      for (int r = 0; r < p; ++r) {
        double s = 0.0;
        for (int k = 0; k <= r; ++k) s += L[r * p + k] * z[k];
        th[r] += sq * s;
      }
    }
    double mean = th[0];
    for (int j = 0; j < J; ++j) mean += th[1 + j] * sample_student_t(stream, h_next[j]);
    double yd = mean + stream.normal() * std::sqrt(v_next);
    out.samples[i] = yd;
    acc += yd;
  }
  out.point = acc / term.kept;
  return out;
}

inline PredictResult predict_next(const SynthesisDraws& draws,
                                  const std::vector<ForecastDensity>& h_next,
                                  const Discounts& d, RandomStream& stream) {
  return predict_next(draws.terminals, h_next, d, stream);
}

enum class Protocol { full_rerun, warm_start };

struct SequentialBpsResult {
  std::vector<double> points;        // one per forecast origin
  std::vector<double> mc_se;         // batch-means standard error of each point
  Eigen::MatrixXd coef_means;        // per origin: posterior mean of theta'_T
};

// Sequential recalibration: at each origin t (t observed values), run the
// Gibbs sampler on data up to t and simulate the forecast for index t.
// Forecast origins are first_origin..len(h)-1; the panel may carry one more
// row than y so the final forecast can reach past the observed series.
inline SequentialBpsResult sequential_bps(const std::vector<double>& y,
                                          const ForecastPanel& h,
                                          const BpsConfig& cfg,
                                          Protocol protocol,
                                          RandomStream& stream,
                                          int first_origin = 2) {
  cfg.validate();
  h.validate();
  const int n = static_cast<int>(y.size());
  if (h.T != n && h.T != n + 1)
    throw std::invalid_argument("sequential_bps: panel/series misaligned");
  if (first_origin < 2)
    throw std::invalid_argument("sequential_bps: first_origin must be >= 2");
  if (h.T <= first_origin)
    throw std::invalid_argument("sequential_bps: nothing to forecast");
  const int J = h.J;
  const int p = J + 1;
  const int n_forecasts = h.T - first_origin;

  SequentialBpsResult out;
  out.points.resize(n_forecasts);
  out.mc_se.resize(n_forecasts);
  out.coef_means.resize(n_forecasts, p);

  detail::GibbsWorkspace ws;
  TerminalDraws term;
  std::vector<double> coef_sum(p);
  std::vector<ForecastDensity> h_next(J);

  for (int origin = first_origin; origin < h.T; ++origin) {
    const int T = origin;
    ForecastPanel sub(T, J);
    std::copy(h.cell.begin(), h.cell.begin() + static_cast<size_t>(T) * J,
              sub.cell.begin());

    int burn;
    if (protocol == Protocol::warm_start && origin > first_origin) {
      // keep x_{1:T-1} from the previous origin's final sweep
      std::vector<double> prev_x = ws.x;
      ws.resize(T, J);
      std::copy(prev_x.begin(), prev_x.end(), ws.x.begin());
      for (int j = 0; j < J; ++j)
        ws.x[static_cast<size_t>(T - 1) * J + j] = sub.at(T - 1, j).location;
      burn = cfg.warm_start_burn;
    } else {
      ws.resize(T, J);
      detail::init_x_at_prior_locations(sub, ws);
      burn = cfg.burn_in;
    }

    term.resize(p, cfg.kept_draws);
    std::fill(coef_sum.begin(), coef_sum.end(), 0.0);
    int slot = 0;
    detail::gibbs_core(y.data(), T, sub, cfg, burn, stream, ws,
                       [&](const detail::GibbsWorkspace& w) {
                         detail::record_terminals(w, slot, term);
                         const double* thT =
                             w.theta.data() + static_cast<size_t>(T) * p;
                         for (int i = 0; i < p; ++i) coef_sum[i] += thT[i];
                         ++slot;
                       });

    for (int j = 0; j < J; ++j) h_next[j] = h.at(origin, j);
    PredictResult pred = predict_next(term, h_next, cfg.discounts, stream);
    const int idx = origin - first_origin;
    out.points[idx] = pred.point;
    for (int i = 0; i < p; ++i)
      out.coef_means(idx, i) = coef_sum[i] / cfg.kept_draws;

    // batch-means MC standard error of the point forecast
    const int n_batches = 20;
    const int bsz = std::max(1, cfg.kept_draws / n_batches);
    const int nb = cfg.kept_draws / bsz;
    double bm = 0.0, bs2 = 0.0;
    for (int bi = 0; bi < nb; ++bi) {
      double s = 0.0;
      for (int k = 0; k < bsz; ++k) s += pred.samples[bi * bsz + k];
      s /= bsz;
      bm += s;
      bs2 += s * s;
    }
    bm /= nb;
    bs2 = bs2 / nb - bm * bm;
    out.mc_se[idx] = std::sqrt(std::max(bs2, 0.0) / nb);
  }
  return out;
}

}  // namespace synthcast
