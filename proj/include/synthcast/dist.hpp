#pragma once

// Scalar distributions used across the library: sampling, log densities,
// CDFs (for calibration checks), and the closed-form normal KL divergence.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "synthcast/rng.hpp"

namespace synthcast {

// Location-scale Student-t; `scale` is the squared scale (the q of a DLM
// one-step forecast), not the standard deviation.
struct StudentT {
  double location = 0.0;
  double scale = 1.0;
  double dof = 1.0;

  void validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("StudentT: scale must be > 0");
    if (!(dof > 0.0)) throw std::invalid_argument("StudentT: dof must be > 0");
  }
};

inline double sample_normal(RandomStream& stream, double mean, double variance) {
  if (!(variance >= 0.0))
    throw std::invalid_argument("sample_normal: variance must be >= 0");
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * stream.normal();
}

// Marsaglia-Tsang squeeze method; shape < 1 handled by the boost
// G(a) = G(a+1) * U^(1/a).
inline double sample_gamma(RandomStream& stream, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("sample_gamma: shape and rate must be > 0");
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(stream.uniform_pos(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      double g = boost * d * v / rate;
      // underflow of the sub-1 boost must not produce an exact zero
      return g > 0.0 ? g : std::numeric_limits<double>::min();
    }
  }
}

inline double sample_beta(RandomStream& stream, double a, double b) {
  double x = sample_gamma(stream, a, 1.0);
  double y = sample_gamma(stream, b, 1.0);
  return x / (x + y);
}

// Scale mixture draw: x = loc + z * sqrt(scale / lambda), lambda ~ G(dof/2, dof/2).
// The same auxiliary representation backs the synthesis sampler.
inline double sample_student_t(RandomStream& stream, const StudentT& d) {
  d.validate();
  double lambda = sample_gamma(stream, 0.5 * d.dof, 0.5 * d.dof);
  return d.location + stream.normal() * std::sqrt(d.scale / lambda);
}

inline double normal_logpdf(double x, double mean, double variance) {
  if (!(variance > 0.0))
    throw std::invalid_argument("normal_logpdf: variance must be > 0");
  const double half_log_2pi = 0.91893853320467274178;
  double z = x - mean;
  return -half_log_2pi - 0.5 * std::log(variance) - 0.5 * z * z / variance;
}

inline double student_t_logpdf(double x, const StudentT& d) {
  d.validate();
  double z2 = (x - d.location) * (x - d.location) / (d.dof * d.scale);
  return std::lgamma(0.5 * (d.dof + 1.0)) - std::lgamma(0.5 * d.dof) -
         0.5 * std::log(d.dof * M_PI * d.scale) -
         0.5 * (d.dof + 1.0) * std::log1p(z2);
}

// KL(N(mean1, var1) || N(mean2, var2)).
inline double kl_normal(double mean1, double var1, double mean2, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw std::invalid_argument("kl_normal: variances must be > 0");
  double dm = mean1 - mean2;
  return 0.5 * (std::log(var2 / var1) + var1 / var2 + dm * dm / var2 - 1.0);
}

inline double normal_cdf(double x, double mean, double variance) {
  if (!(variance > 0.0))
    throw std::invalid_argument("normal_cdf: variance must be > 0");
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

// Regularized lower incomplete gamma P(a, x); series for x < a+1, Lentz
// continued fraction otherwise.
inline double reg_lower_gamma(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("reg_lower_gamma: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(log_prefix);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double dd = 1.0 / b;
  double h = dd;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    dd = an * dd + b;
    if (std::fabs(dd) < tiny) dd = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    dd = 1.0 / dd;
    double del = dd * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefix) * h;
}

// CDF of Gamma(shape, rate) at x.
inline double gamma_cdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma_cdf: shape and rate must be > 0");
  if (x <= 0.0) return 0.0;
  return reg_lower_gamma(shape, rate * x);
}

namespace detail {
inline double beta_cont_frac(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}
}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("reg_inc_beta: need a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(log_front) * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - std::exp(log_front) * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double x, const StudentT& d) {
  d.validate();
  double t = (x - d.location) / std::sqrt(d.scale);
  double w = d.dof / (d.dof + t * t);
  double half_tail = 0.5 * reg_inc_beta(0.5 * d.dof, 0.5, w);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

}  // namespace synthcast
