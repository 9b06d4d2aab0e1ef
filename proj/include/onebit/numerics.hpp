#pragma once

// Scalar numeric kernels shared by the prior and channel modules. Everything
// here is branch-stable for extreme arguments: no intermediate overflow, no
// 0/0, and tail regimes switch to scaled or asymptotic forms.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace onebit::num {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1/sqrt(2*pi)
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
inline constexpr double kSqrt2OverPi = 0.79788456080286535588; // sqrt(2/pi)
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(t^2) * erfc(t) without overflow.  Three regimes:
//   t < -26.5          : overflows double range
//   -26.5 <= t <= 20   : direct product, with an fma split of t^2 so the
//                        argument rounding of exp(t*t) does not cost accuracy
//   t > 20             : asymptotic series 1/(t*sqrt(pi)) * sum_k (-1)^k (2k-1)!!/(2t^2)^k
inline double erfcx(double t) {
  if (t < -26.5) return kInf;
  if (t <= 20.0) {
    double hi = t * t;
    double lo = std::fma(t, t, -hi);  // exact remainder of the squaring
    return std::exp(hi) * std::erfc(t) * (1.0 + lo);
  }
  const double z = 0.5 / (t * t);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) * z;
    sum += term;
  }
  return sum * std::numbers::inv_sqrtpi_v<double> / t;
}

// N(x | mean, var) and its log. var must be > 0.
inline double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * d * d / var);
}

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

// log(Phi(-t)), stable for all t. Phi is the standard normal CDF.
inline double log_std_cdf_neg(double t) {
  if (t <= 8.0) return std::log(0.5 * std::erfc(t / kSqrt2));
  // Phi(-t) = 0.5 * exp(-t^2/2) * erfcx(t/sqrt(2))
  double hi = 0.5 * t * t;
  double lo = std::fma(0.5 * t, t, -hi);
  return -hi - lo + std::log(0.5 * erfcx(t / kSqrt2));
}

// Phi(-t) itself; underflows to 0 beyond t ~ 38 which is correct rounding.
inline double std_cdf_neg(double t) { return 0.5 * std::erfc(t / kSqrt2); }

// Inverse Mills ratio phi(t) / Phi(-t). Positive, ~t + 1/t for large t.
inline double inv_mills(double t) {
  if (t <= 0.0) {
    // Phi(-t) >= 0.5 here, no cancellation.
    return kInvSqrt2Pi * std::exp(-0.5 * t * t) / (0.5 * std::erfc(t / kSqrt2));
  }
  return 2.0 * kInvSqrt2Pi / erfcx(t / kSqrt2);
}

// max + log(sum(exp(v - max))) over a small span, ignoring -inf entries.
inline double logsumexp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace onebit::num
