#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//
// The panel with the largest error estimate is bisected until the summed
// estimate drops below the absolute tolerance. The error estimate of a panel
// is |K15 - G7|, which is pessimistic for smooth integrands.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "rotarclt/errors.hpp"

namespace rotarclt {

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;

  IntegralResult& operator+=(const IntegralResult& other) {
    value += other.value;
    error_estimate += other.error_estimate;
    subdivisions += other.subdivisions;
    return *this;
  }
  friend IntegralResult operator+(IntegralResult a, const IntegralResult& b) { return a += b; }
  friend IntegralResult operator*(double s, IntegralResult r) {
    r.value *= s;
    r.error_estimate *= std::abs(s);
    return r;
  }
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_subdivisions = 10000;
};

namespace gk15 {

// Abscissae of the 15-point Kronrod rule on [-1, 1]; odd entries are the
// 7-point Gauss nodes.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel evaluate(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace gk15

/// Integrates f over [a, b]. Throws NumericError (with the partial sum) if
/// the tolerance is not met within the subdivision budget.
template <class F>
IntegralResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (!(b > a)) return {};
  std::priority_queue<gk15::Panel> panels;
  panels.push(gk15::evaluate(f, a, b));
  double total = panels.top().value;
  double error = panels.top().error;
  int subdivisions = 1;
  while (error > opts.abs_tol) {
    if (subdivisions >= opts.max_subdivisions) {
      throw NumericError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]",
                         total, error);
    }
    const gk15::Panel worst = panels.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split further in floating point.
      throw NumericError("adaptive quadrature exhausted floating-point resolution", total, error);
    }
    panels.pop();
    const auto left = gk15::evaluate(f, worst.a, mid);
    const auto right = gk15::evaluate(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++subdivisions;
    if (error <= opts.abs_tol) {
      // Re-sum from scratch so cancellation in the running total is not reported.
      double value = 0.0, err = 0.0;
      auto copy = panels;
      while (!copy.empty()) {
        value += copy.top().value;
        err += copy.top().error;
        copy.pop();
      }
      total = value;
      error = err;
    }
  }
  return {total, error, subdivisions};
}

/// Integrates over consecutive pieces [p0, p1], [p1, p2], ... Breakpoints
/// must be sorted; each piece gets an equal share of the tolerance.
template <class F>
IntegralResult integrate_pieces(F&& f, std::span<const double> breakpoints,
                                const QuadratureOptions& opts = {}) {
  IntegralResult out;
  if (breakpoints.size() < 2) return out;
  QuadratureOptions piece = opts;
  piece.abs_tol = opts.abs_tol / static_cast<double>(breakpoints.size() - 1);
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    out += integrate(f, breakpoints[i], breakpoints[i + 1], piece);
  }
  return out;
}

}  // namespace rotarclt
