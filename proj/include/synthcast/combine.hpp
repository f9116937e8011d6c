#pragma once

// Baseline linear pooling strategies: equal weights, Bayesian model
// averaging driven by cumulative predictive log scores, and Mallows-penalty
// weights minimized over the unit simplex.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace synthcast {

struct WeightVector {
  std::vector<double> w;

  int size() const { return static_cast<int>(w.size()); }
  double operator[](int j) const { return w[j]; }

  void validate() const {
    double sum = 0.0;
    for (double wj : w) {
      if (wj < -1e-12 || wj > 1.0 + 1e-12)
        throw std::logic_error("WeightVector: entry outside [0, 1]");
      sum += wj;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::logic_error("WeightVector: entries must sum to 1");
  }
};

inline WeightVector equal_weights(int J) {
  if (J < 1) throw std::invalid_argument("equal_weights: J must be >= 1");
  return WeightVector{std::vector<double>(J, 1.0 / J)};
}

struct BmaScoreState {
  std::vector<double> cum_log_score;

  explicit BmaScoreState(int J = 0) : cum_log_score(J, 0.0) {}
};

struct BmaUpdateResult {
  BmaScoreState state;
  WeightVector weights;
};

inline WeightVector bma_current_weights(const BmaScoreState& state) {
  const int J = static_cast<int>(state.cum_log_score.size());
  if (J == 0) throw std::invalid_argument("bma_current_weights: empty state");
  double mx = *std::max_element(state.cum_log_score.begin(),
                                state.cum_log_score.end());
  WeightVector out;
  out.w.resize(J);
  double sum = 0.0;
  for (int j = 0; j < J; ++j) {
    out.w[j] = std::exp(state.cum_log_score[j] - mx);
    sum += out.w[j];
  }
  for (int j = 0; j < J; ++j) out.w[j] /= sum;
  return out;
}

// Weights are softmax of cumulative log predictive scores (posterior model
// probabilities under equal prior odds), computed with max-subtraction.
inline BmaUpdateResult bma_update(const BmaScoreState& state,
                                  const std::vector<double>& log_pred_density) {
  const int J = static_cast<int>(state.cum_log_score.size());
  if (static_cast<int>(log_pred_density.size()) != J)
    throw std::invalid_argument("bma_update: score vector length mismatch");
  BmaUpdateResult out;
  out.state.cum_log_score.resize(J);
  for (int j = 0; j < J; ++j) {
    if (!std::isfinite(log_pred_density[j]))
      throw std::invalid_argument("bma_update: non-finite log density");
    out.state.cum_log_score[j] = state.cum_log_score[j] + log_pred_density[j];
  }
  double mx = *std::max_element(out.state.cum_log_score.begin(),
                                out.state.cum_log_score.end());
  out.weights.w.resize(J);
  double sum = 0.0;
  for (int j = 0; j < J; ++j) {
    out.weights.w[j] = std::exp(out.state.cum_log_score[j] - mx);
    sum += out.weights.w[j];
  }
  for (int j = 0; j < J; ++j) out.weights.w[j] /= sum;
  return out;
}

namespace detail {

inline double mallows_criterion(const std::vector<std::vector<double>>& preds,
                                const std::vector<double>& realized,
                                const std::vector<int>& k, double sigma2,
                                const std::vector<double>& w) {
  const int J = static_cast<int>(preds.size());
  const int S = static_cast<int>(realized.size());
  double sse = 0.0;
  for (int t = 0; t < S; ++t) {
    double yhat = 0.0;
    for (int j = 0; j < J; ++j) yhat += w[j] * preds[j][t];
    double e = realized[t] - yhat;
    sse += e * e;
  }
  double pen = 0.0;
  for (int j = 0; j < J; ++j) pen += w[j] * k[j];
  return sse + 2.0 * sigma2 * pen;
}

}  // namespace detail

// Minimize sum_s (y_s - <w, yhat_s>)^2 + 2 sigma2 sum_j w_j k_j over the unit
// simplex. J = 2 has a closed form on [0, 1]; larger J uses pairwise
// coordinate descent from equal weights (the tie-break point).
inline WeightVector mallows_weights(
    const std::vector<std::vector<double>>& point_forecasts,
    const std::vector<double>& realized, const std::vector<int>& k,
    double sigma2_hat) {
  const int J = static_cast<int>(point_forecasts.size());
  if (J < 1) throw std::invalid_argument("mallows_weights: no forecasters");
  if (realized.empty()) throw std::invalid_argument("mallows_weights: empty window");
  if (static_cast<int>(k.size()) != J)
    throw std::invalid_argument("mallows_weights: k length mismatch");
  for (const auto& series : point_forecasts)
    if (series.size() != realized.size())
      throw std::invalid_argument("mallows_weights: series not aligned");
  if (!(sigma2_hat >= 0.0))
    throw std::invalid_argument("mallows_weights: sigma2_hat must be >= 0");

  if (J == 1) return WeightVector{{1.0}};

  const int S = static_cast<int>(realized.size());
  WeightVector out = equal_weights(J);

  // Closed form for mass shared between a pair (i kept at w, j at mass - w):
  //   w* = (sum r d - sigma2 (k_i - k_j)) / sum d^2, clipped to [0, mass],
  // with d = yhat_i - yhat_j and r = y - (rest + mass * yhat_j).
  auto optimize_pair = [&](int i, int j, std::vector<double>& w) {
    double mass = w[i] + w[j];
    if (mass <= 0.0) return;
    double num = 0.0;
    double den = 0.0;
    for (int t = 0; t < S; ++t) {
      double rest = 0.0;
      for (int l = 0; l < J; ++l)
        if (l != i && l != j) rest += w[l] * point_forecasts[l][t];
      double d = point_forecasts[i][t] - point_forecasts[j][t];
      double r = realized[t] - rest - mass * point_forecasts[j][t];
      num += r * d;
      den += d * d;
    }
    num -= sigma2_hat * (k[i] - k[j]);
    if (den <= 0.0) return;  // identical forecasts: keep current split
    double wi = std::clamp(num / den, 0.0, mass);
    w[i] = wi;
    w[j] = mass - wi;
  };

  if (J == 2) {
    optimize_pair(0, 1, out.w);
    return out;
  }

  double crit = detail::mallows_criterion(point_forecasts, realized, k,
                                          sigma2_hat, out.w);
  for (int sweep = 0; sweep < 200; ++sweep) {
    for (int i = 0; i < J; ++i)
      for (int j = i + 1; j < J; ++j) optimize_pair(i, j, out.w);
    double next = detail::mallows_criterion(point_forecasts, realized, k,
                                            sigma2_hat, out.w);
    if (crit - next < 1e-10) break;
    crit = next;
  }
  // renormalize away accumulated rounding
  double sum = 0.0;
  for (double wj : out.w) sum += wj;
  for (double& wj : out.w) wj /= sum;
  return out;
}

inline double pool_point(const WeightVector& w, const std::vector<double>& means) {
  if (w.w.size() != means.size())
    throw std::invalid_argument("pool_point: length mismatch");
  double out = 0.0;
  for (size_t j = 0; j < means.size(); ++j) out += w.w[j] * means[j];
  return out;
}

}  // namespace synthcast
