#pragma once

// Conjugate random-walk dynamic linear model with discount factors:
// forward filtering, one-step Student-t forecasts, and forward-filtering
// backward-sampling with discount stochastic volatility.
//
// Conventions (West & Harrison style): theta_t | v ~ N(m, C v/s),
// 1/v ~ G(n/2, n s/2). `delta` discounts the state (R = C/delta), `beta`
// discounts the volatility degrees of freedom (n -> beta n).

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "synthcast/dist.hpp"
#include "synthcast/rng.hpp"

namespace synthcast {

using ForecastDensity = StudentT;

struct Discounts {
  double delta = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(delta > 0.0) || delta > 1.0)
      throw std::invalid_argument("Discounts: delta must be in (0, 1]");
    if (!(beta > 0.0) || beta > 1.0)
      throw std::invalid_argument("Discounts: beta must be in (0, 1]");
  }
};

// Normal-inverse-gamma posterior summary of the DLM state at one time point.
struct NigState {
  Eigen::VectorXd m;
  Eigen::MatrixXd C;
  double n = 1.0;
  double s = 1.0;

  int dim() const { return static_cast<int>(m.size()); }

  void validate() const {
    if (C.rows() != m.size() || C.cols() != m.size())
      throw std::invalid_argument("NigState: C must be p x p");
    if (!(n > 0.0) || !(s > 0.0))
      throw std::invalid_argument("NigState: n and s must be > 0");
  }
};

// Per-time filtering records, stored in flat buffers so the Gibbs sweep can
// rerun the filter without allocating.  Index 0 of the posterior arrays holds
// the time-0 prior; observation t = 1..T lives at index t (posterior) and
// t-1 (prior / forecast arrays).
struct FilterHistory {
  int p = 0;
  int T = 0;
  std::vector<double> F;   // T * p regressors
  std::vector<double> a;   // T * p prior means
  std::vector<double> R;   // T * p * p prior scales
  std::vector<double> f;   // T forecast locations
  std::vector<double> q;   // T forecast scales
  std::vector<double> fdof;  // T forecast dof (beta * n_{t-1})
  std::vector<double> m;   // (T+1) * p posterior means
  std::vector<double> C;   // (T+1) * p * p posterior scales
  std::vector<double> n;   // T+1 volatility dof
  std::vector<double> s;   // T+1 volatility point estimates

  void resize(int p_, int T_) {
    p = p_;
    T = T_;
    F.assign(static_cast<size_t>(T) * p, 0.0);
    a.assign(static_cast<size_t>(T) * p, 0.0);
    R.assign(static_cast<size_t>(T) * p * p, 0.0);
    f.assign(T, 0.0);
    q.assign(T, 0.0);
    fdof.assign(T, 0.0);
    m.assign(static_cast<size_t>(T + 1) * p, 0.0);
    C.assign(static_cast<size_t>(T + 1) * p * p, 0.0);
    n.assign(T + 1, 0.0);
    s.assign(T + 1, 0.0);
  }

  // Posterior summaries at t = 0..T (0 is the initial prior).
  Eigen::Map<const Eigen::VectorXd> m_at(int t) const {
    return {m.data() + static_cast<size_t>(t) * p, p};
  }
  Eigen::Map<const Eigen::MatrixXd> C_at(int t) const {
    return {C.data() + static_cast<size_t>(t) * p * p, p, p};
  }
  NigState state_at(int t) const {
    return NigState{m_at(t), C_at(t), n[t], s[t]};
  }
  ForecastDensity forecast_at(int t) const {  // t = 1..T
    return ForecastDensity{f[t - 1], q[t - 1], fdof[t - 1]};
  }
};

namespace detail {

// One filter step on raw buffers. On entry (m, C, n, s) describe time t-1;
// on exit they describe time t. Prior/forecast quantities are written out.
inline void filter_step(int p, const double* Freg, double y, const Discounts& d,
                        double* m, double* C, double& n, double& s, double* a,
                        double* R, double& f_out, double& q_out,
                        double& fdof_out) {
  const double inv_delta = 1.0 / d.delta;
  for (int i = 0; i < p; ++i) a[i] = m[i];
  for (int i = 0; i < p * p; ++i) R[i] = C[i] * inv_delta;

  // forecast: f = F'a, q = F'RF + s
  double f = 0.0;
  for (int i = 0; i < p; ++i) f += Freg[i] * a[i];
  double q = s;
  for (int i = 0; i < p; ++i) {
    double ri = 0.0;
    for (int j = 0; j < p; ++j) ri += R[i * p + j] * Freg[j];
    q += Freg[i] * ri;
  }
  if (!(q > 0.0)) throw std::runtime_error("dlm: forecast scale q <= 0");

  const double e = y - f;
  const double bn = d.beta * n;
  const double n_new = bn + 1.0;
  const double s_new = s * (bn + e * e / q) / n_new;

  // A = R F / q, m = a + A e, C = (s'/s) (R - A A' q)
  double A[64];
  for (int i = 0; i < p; ++i) {
    double ri = 0.0;
    for (int j = 0; j < p; ++j) ri += R[i * p + j] * Freg[j];
    A[i] = ri / q;
  }
  const double ratio = s_new / s;
  for (int i = 0; i < p; ++i) {
    m[i] = a[i] + A[i] * e;
    for (int j = 0; j <= i; ++j) {
      double cij = ratio * (R[i * p + j] - A[i] * A[j] * q);
      C[i * p + j] = cij;
      C[j * p + i] = cij;
    }
  }
  n = n_new;
  s = s_new;
  f_out = f;
  q_out = q;
  fdof_out = bn;
}

// Lower Cholesky of a p x p PSD matrix; near-zero pivots are clamped so the
// static-coefficient limit (zero evolution variance) stays well defined.
inline void cholesky_psd(int p, const double* Amat, double* L) {
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = Amat[i * p + j];
      for (int k = 0; k < j; ++k) sum -= L[i * p + k] * L[j * p + k];
      if (i == j) {
        L[i * p + i] = sum > 0.0 ? std::sqrt(sum) : 0.0;
      } else {
        L[i * p + j] = L[j * p + j] > 0.0 ? sum / L[j * p + j] : 0.0;
      }
    }
    for (int j = i + 1; j < p; ++j) L[i * p + j] = 0.0;
  }
}

}  // namespace detail

struct EvolveResult {
  NigState prior;  // a = m, R = C/delta, dof discounted
  ForecastDensity forecast;
};

// State evolution plus one-step forecast. The returned prior carries
// (a, R, beta n, s); feeding it to update() completes the recursion.
inline EvolveResult evolve_forecast(const NigState& state,
                                    const Eigen::VectorXd& F,
                                    const Discounts& d) {
  state.validate();
  d.validate();
  if (F.size() != state.m.size())
    throw std::invalid_argument("evolve_forecast: regressor dimension mismatch");
  EvolveResult out;
  out.prior.m = state.m;
  out.prior.C = state.C / d.delta;
  out.prior.n = d.beta * state.n;
  out.prior.s = state.s;
  double f = F.dot(out.prior.m);
  double q = F.dot(out.prior.C * F) + state.s;
  if (!(q > 0.0)) throw std::runtime_error("evolve_forecast: q <= 0");
  out.forecast = ForecastDensity{f, q, out.prior.n};
  return out;
}

inline NigState update(const NigState& prior, const ForecastDensity& forecast,
                       const Eigen::VectorXd& F, double y) {
  if (F.size() != prior.m.size())
    throw std::invalid_argument("update: regressor dimension mismatch");
  if (!(forecast.scale > 0.0)) throw std::runtime_error("update: q <= 0");
  const double e = y - forecast.location;
  const double q = forecast.scale;
  Eigen::VectorXd A = prior.C * F / q;
  NigState post;
  post.m = prior.m + A * e;
  post.n = prior.n + 1.0;
  post.s = prior.s * (prior.n + e * e / q) / post.n;
  post.C = (post.s / prior.s) * (prior.C - A * A.transpose() * q);
  post.C = 0.5 * (post.C + post.C.transpose()).eval();
  return post;
}

// Filter a series against externally supplied regressors (flat, row-major
// T x p). `hist` is resized only when the shape changes.
inline void run_filter(const double* y, const double* Fflat, int T, int p,
                       const NigState& prior, const Discounts& d,
                       FilterHistory& hist) {
  prior.validate();
  d.validate();
  if (T < 1) throw std::invalid_argument("run_filter: empty series");
  if (p > 64) throw std::invalid_argument("run_filter: state dimension > 64");
  if (hist.p != p || hist.T != T) hist.resize(p, T);
  for (int i = 0; i < p; ++i) hist.m[i] = prior.m[i];
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) hist.C[i * p + j] = prior.C(i, j);
  hist.n[0] = prior.n;
  hist.s[0] = prior.s;
  std::copy(Fflat, Fflat + static_cast<size_t>(T) * p, hist.F.begin());

  double* m = hist.m.data();
  double* C = hist.C.data();
  double n = prior.n;
  double s = prior.s;
  for (int t = 0; t < T; ++t) {
    double* m_next = hist.m.data() + static_cast<size_t>(t + 1) * p;
    double* C_next = hist.C.data() + static_cast<size_t>(t + 1) * p * p;
    std::copy(m, m + p, m_next);
    std::copy(C, C + p * p, C_next);
    detail::filter_step(p, Fflat + static_cast<size_t>(t) * p, y[t], d, m_next,
                        C_next, n, s, hist.a.data() + static_cast<size_t>(t) * p,
                        hist.R.data() + static_cast<size_t>(t) * p * p,
                        hist.f[t], hist.q[t], hist.fdof[t]);
    hist.n[t + 1] = n;
    hist.s[t + 1] = s;
    m = m_next;
    C = C_next;
  }
}

struct AgentRun {
  FilterHistory history;
  std::vector<ForecastDensity> forecasts;  // one-step, made before each y_t
};

// A forecasting agent: random-walk DLM regression of y on (1, covariate).
inline AgentRun run_agent(const std::vector<double>& y,
                          const std::vector<double>& covariate,
                          const NigState& prior, const Discounts& d) {
  if (y.empty()) throw std::invalid_argument("run_agent: empty series");
  if (covariate.size() != y.size())
    throw std::invalid_argument("run_agent: series lengths differ");
  if (prior.dim() != 2)
    throw std::invalid_argument("run_agent: prior must be 2-dimensional");
  const int T = static_cast<int>(y.size());
  std::vector<double> F(static_cast<size_t>(T) * 2);
  for (int t = 0; t < T; ++t) {
    F[2 * t] = 1.0;
    F[2 * t + 1] = covariate[t];
  }
  AgentRun out;
  run_filter(y.data(), F.data(), T, 2, prior, d, out.history);
  out.forecasts.reserve(T);
  for (int t = 1; t <= T; ++t) out.forecasts.push_back(out.history.forecast_at(t));
  return out;
}

// Backward sampling of {theta_t, v_t}, t = 0..T, from a completed filter
// pass. theta is written row-major (T+1) x p, v has T+1 entries.
//   1/v_T ~ G(n_T/2, n_T s_T / 2); 1/v_t = beta/v_{t+1} + eta_t,
//   eta_t ~ G((1-beta) n_t / 2, n_t s_t / 2);
//   theta_T ~ N(m_T, C_T v_T/s_T);
//   theta_t ~ N((1-delta) m_t + delta theta_{t+1}, (1-delta) C_t v_t/s_t).
inline void ffbs_sample(const FilterHistory& hist, const Discounts& d,
                        RandomStream& stream, double* theta, double* v) {
  d.validate();
  const int p = hist.p;
  const int T = hist.T;
  if (T < 1) throw std::invalid_argument("ffbs_sample: empty history");
  double L[64 * 64];
  double z[64];

  double phi = sample_gamma(stream, 0.5 * hist.n[T], 0.5 * hist.n[T] * hist.s[T]);
  v[T] = 1.0 / phi;
  {
    double scale = v[T] / hist.s[T];
    detail::cholesky_psd(p, hist.C.data() + static_cast<size_t>(T) * p * p, L);
    for (int i = 0; i < p; ++i) z[i] = stream.normal();
    double* th = theta + static_cast<size_t>(T) * p;
    const double* mT = hist.m.data() + static_cast<size_t>(T) * p;
    double sq = std::sqrt(scale);
    for (int i = 0; i < p; ++i) {
      double acc = 0.0;
      for (int k = 0; k <= i; ++k) acc += L[i * p + k] * z[k];
      th[i] = mT[i] + sq * acc;
    }
  }

  const double one_minus_delta = 1.0 - d.delta;
  for (int t = T - 1; t >= 0; --t) {
    if (d.beta < 1.0) {
      double eta = sample_gamma(stream, 0.5 * (1.0 - d.beta) * hist.n[t],
                                0.5 * hist.n[t] * hist.s[t]);
      phi = d.beta * phi + eta;
    }
    v[t] = 1.0 / phi;
    double* th = theta + static_cast<size_t>(t) * p;
    const double* th_next = theta + static_cast<size_t>(t + 1) * p;
    if (one_minus_delta == 0.0) {
      std::copy(th_next, th_next + p, th);
      continue;
    }
    const double* mt = hist.m.data() + static_cast<size_t>(t) * p;
    detail::cholesky_psd(p, hist.C.data() + static_cast<size_t>(t) * p * p, L);
    double sq = std::sqrt(one_minus_delta * v[t] / hist.s[t]);
    for (int i = 0; i < p; ++i) z[i] = stream.normal();
    for (int i = 0; i < p; ++i) {
      double acc = 0.0;
      for (int k = 0; k <= i; ++k) acc += L[i * p + k] * z[k];
      th[i] = one_minus_delta * mt[i] + d.delta * th_next[i] + sq * acc;
    }
  }
}

// Convenience overload returning Eigen containers.
struct FfbsDraw {
  Eigen::MatrixXd theta;  // (T+1) x p
  Eigen::VectorXd v;      // T+1
};

inline FfbsDraw ffbs_sample(const FilterHistory& hist, const Discounts& d,
                            RandomStream& stream) {
  FfbsDraw out;
  out.theta.resize(hist.T + 1, hist.p);
  out.v.resize(hist.T + 1);
  std::vector<double> theta_flat(static_cast<size_t>(hist.T + 1) * hist.p);
  ffbs_sample(hist, d, stream, theta_flat.data(), out.v.data());
  for (int t = 0; t <= hist.T; ++t)
    for (int i = 0; i < hist.p; ++i)
      out.theta(t, i) = theta_flat[static_cast<size_t>(t) * hist.p + i];
  return out;
}

}  // namespace synthcast
