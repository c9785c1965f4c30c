#pragma once

// Standard normal helpers shared by every module.

#include <cmath>
#include <numbers>

namespace rotarclt::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;  // E|Z|

inline double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// 1 - Phi(x), accurate in the upper tail.
inline double survival(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

/// int_{|z|>c} z^2 dPhi(z) for c >= 0.
inline double tail_second_moment(double c) {
  if (c <= 0.0) return 1.0;
  if (!std::isfinite(c)) return 0.0;
  return 2.0 * (c * pdf(c) + survival(c));
}

/// P(|Z| > c).
inline double two_sided_tail(double c) {
  if (c <= 0.0) return 1.0;
  return std::erfc(c * kInvSqrt2);
}

/// int_c^inf u * (1 - Phi(u)) du, for any real c.
inline double upper_first_moment_of_survival(double c) {
  if (!std::isfinite(c)) return c > 0 ? 0.0 : INFINITY;
  return 0.5 * ((1.0 - c * c) * survival(c) + c * pdf(c));
}

/// Antiderivative of u * (Phi(u) - 1/2).
inline double centered_cdf_moment_primitive(double u) {
  return 0.5 * ((u * u - 1.0) * cdf(u) + u * pdf(u)) - 0.25 * u * u;
}

/// E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi).
inline double abs_moment(double p) {
  return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0))) /
         std::sqrt(std::numbers::pi);
}

}  // namespace rotarclt::normal
