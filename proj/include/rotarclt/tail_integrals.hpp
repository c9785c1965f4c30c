#pragma once

// Tail integrals against dF_j and dPhi_j, and the Rotar integrand
// |x| * |F_j(x) - Phi_j(x)|.
//
// Everything is first computed for the standardized shape Y and then scaled:
//   int_{|x|>t} x^2 dF_j          = sigma_j^2     * T(t / sigma_j)
//   int_{|x|>t} |x|^p dF_j        = sigma_j^p     * A_p(t / sigma_j)
//   int_{|x|>t} |x||F_j - Phi_j|  = sigma_j^2     * R(t / sigma_j)

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rotarclt/dist_model.hpp"
#include "rotarclt/gauss_kronrod.hpp"
#include "rotarclt/normal.hpp"

namespace rotarclt {

namespace tails {

inline constexpr double kEnvelopeTarget = 1e-14;

namespace detail {

/// Points in (a, b) where g changes sign, located by scan + bisection.
template <class G>
std::vector<double> sign_changes(G&& g, double a, double b, int scan = 64) {
  std::vector<double> roots;
  if (!(b > a)) return roots;
  double x0 = a, g0 = g(a);
  for (int i = 1; i <= scan; ++i) {
    const double x1 = a + (b - a) * i / scan;
    const double g1 = g(x1);
    if ((g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0)) {
      double lo = x0, hi = x1, glo = g0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    g0 = g1;
  }
  return roots;
}

/// Integrates g over [a, b] with breakpoints at the sign changes of `kink`.
template <class G, class K>
IntegralResult integrate_with_kinks(G&& g, K&& kink, double a, double b, const QuadratureOptions& opts) {
  if (!(b > a)) return {};
  std::vector<double> points{a};
  for (double r : sign_changes(kink, a, b)) {
    if (r > points.back() && r < b) points.push_back(r);
  }
  points.push_back(b);
  return integrate_pieces(g, points, opts);
}

/// Smallest L >= start (in unit steps) with envelope(L) < target.
template <class E>
double envelope_cutoff(E&& envelope, double start, double target = kEnvelopeTarget) {
  double cutoff = std::max(start, 1.0);
  for (int i = 0; i < 4096 && envelope(cutoff) >= target; ++i) cutoff += 1.0;
  return cutoff;
}

}  // namespace detail

/// E[Y^2 ; |Y| > c] for c >= 0. Closed form for every shape.
inline IntegralResult second_moment(const Shape& s, double c) {
  if (!std::isfinite(c)) return {};
  c = std::max(c, 0.0);
  struct Visitor {
    double c;
    double operator()(RademacherShape) const { return c < 1.0 ? 1.0 : 0.0; }
    double operator()(UniformShape) const {
      constexpr double a = UniformShape::kHalfWidth;
      return c < a ? (a * a * a - c * c * c) / (3.0 * a) : 0.0;
    }
    double operator()(NormalShape) const { return normal::tail_second_moment(c); }
    double operator()(CenteredExponentialShape) const {
      // Antiderivative of (x-1)^2 e^{-x} is -e^{-x}(x^2+1).
      const double upper = std::exp(-(1.0 + c)) * (c * c + 2.0 * c + 2.0);
      double lower = 0.0;
      if (c < 1.0) {
        const double b = 1.0 - c;
        lower = 1.0 - std::exp(-b) * (b * b + 1.0);
      }
      return upper + lower;
    }
  };
  return {std::visit(Visitor{c}, s), 0.0, 0};
}

/// E[|Y|^p ; |Y| > c] for c >= 0, p >= 1.
inline IntegralResult abs_moment(const Shape& s, double c, double p, const QuadratureOptions& opts = {}) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("tail moment order must be a finite real >= 1");
  if (!std::isfinite(c)) return {};
  c = std::max(c, 0.0);
  if (c == 0.0) return {shape::abs_moment(s, p), 0.0, 0};

  struct Visitor {
    double c, p;
    const QuadratureOptions& opts;
    IntegralResult operator()(RademacherShape) const { return {c < 1.0 ? 1.0 : 0.0, 0.0, 0}; }
    IntegralResult operator()(UniformShape) const {
      constexpr double a = UniformShape::kHalfWidth;
      if (c >= a) return {};
      return {(std::pow(a, p + 1.0) - std::pow(c, p + 1.0)) / ((p + 1.0) * a), 0.0, 0};
    }
    IntegralResult operator()(NormalShape) const {
      // int_L^inf u^p phi <= L^{p-1} phi(L) / (1 - (p-1)/L^2) once L^2 > p-1.
      auto envelope = [p = p](double L) {
        const double shrink = 1.0 - (p - 1.0) / (L * L);
        if (shrink <= 0.0) return std::numeric_limits<double>::infinity();
        return 2.0 * std::pow(L, p - 1.0) * normal::pdf(L) / shrink;
      };
      const double L = detail::envelope_cutoff(envelope, c + 1.0);
      auto f = [p = p](double u) { return 2.0 * std::pow(u, p) * normal::pdf(u); };
      IntegralResult r = integrate(f, c, L, opts);
      r.error_estimate += envelope(L);
      return r;
    }
    IntegralResult operator()(CenteredExponentialShape) const {
      // Upper branch: int_c^inf u^p e^{-(u+1)} du, truncated with
      // int_L^inf u^p e^{-u} <= L^p e^{-L} / (1 - p/L) for L > p.
      auto envelope = [p = p](double L) {
        const double shrink = 1.0 - p / L;
        if (shrink <= 0.0) return std::numeric_limits<double>::infinity();
        return std::exp(p * std::log(L) - L - 1.0) / shrink;
      };
      const double L = detail::envelope_cutoff(envelope, c + 1.0);
      auto upper = [p = p](double u) { return std::pow(u, p) * std::exp(-(u + 1.0)); };
      IntegralResult r = integrate(upper, c, L, opts);
      r.error_estimate += envelope(L);
      if (c < 1.0) {
        // Lower branch: Y = E - 1 in [-1, -c], i.e. u = 1 - E in [c, 1].
        auto lower = [p = p](double u) { return std::pow(u, p) * std::exp(u - 1.0); };
        r += integrate(lower, c, 1.0, opts);
      }
      return r;
    }
  };
  return std::visit(Visitor{c, p, opts}, s);
}

/// int_{|u|>c} |u| |F(u) - Phi(u)| du for the standardized shape, c >= 0.
inline IntegralResult rotar(const Shape& s, double c, const QuadratureOptions& opts = {}) {
  if (!std::isfinite(c)) return {};
  c = std::max(c, 0.0);
  struct Visitor {
    double c;
    const QuadratureOptions& opts;
    IntegralResult operator()(NormalShape) const { return {}; }
    IntegralResult operator()(RademacherShape) const {
      // |F - Phi| = Phi(u) - 1/2 on [0, 1) and 1 - Phi(u) on [1, inf);
      // the negative half mirrors it.
      double inner = 0.0;
      if (c < 1.0) {
        inner = normal::centered_cdf_moment_primitive(1.0) - normal::centered_cdf_moment_primitive(c);
      }
      const double outer = normal::upper_first_moment_of_survival(std::max(c, 1.0));
      return {2.0 * (inner + outer), 0.0, 0};
    }
    IntegralResult operator()(UniformShape) const {
      constexpr double a = UniformShape::kHalfWidth;
      const Shape s = UniformShape{};
      auto diff = [&s](double u) { return shape::cdf(s, u) - normal::cdf(u); };
      auto integrand = [&diff](double u) { return u * std::abs(diff(u)); };
      IntegralResult half;
      if (c < a) half = detail::integrate_with_kinks(integrand, diff, c, a, opts);
      // F = 1 beyond a.
      half.value += normal::upper_first_moment_of_survival(std::max(c, a));
      return 2.0 * half;
    }
    IntegralResult operator()(CenteredExponentialShape) const {
      const Shape s = CenteredExponentialShape{};
      auto diff = [&s](double u) { return shape::cdf(s, u) - normal::cdf(u); };
      IntegralResult r;
      // Positive side. For u >= 2, e^{-(u+1)} > 1 - Phi(u), so
      // |F - Phi| = e^{-(u+1)} - (1 - Phi(u)) in closed form.
      constexpr double kSignFixed = 2.0;
      if (c < kSignFixed) {
        auto integrand = [&diff](double u) { return u * std::abs(diff(u)); };
        r += detail::integrate_with_kinks(integrand, diff, c, kSignFixed, opts);
      }
      const double m = std::max(c, kSignFixed);
      r.value += std::exp(-(m + 1.0)) * (m + 1.0) - normal::upper_first_moment_of_survival(m);
      // Negative side. Below -1, F = 0 and |F - Phi| = Phi(u).
      if (c < 1.0) {
        auto integrand = [&diff](double v) { return v * std::abs(diff(-v)); };
        auto kink = [&diff](double v) { return diff(-v); };
        r += detail::integrate_with_kinks(integrand, kink, c, 1.0, opts);
      }
      r.value += normal::upper_first_moment_of_survival(std::max(c, 1.0));
      return r;
    }
  };
  return std::visit(Visitor{c, opts}, s);
}

}  // namespace tails

// ---------------------------------------------------------------------------
// Per-summand forms
// ---------------------------------------------------------------------------

/// int_{|x|>threshold} x^2 dF_j(x).
inline IntegralResult tail_second_moment(const SummandFamily& family, std::int64_t j, double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("tail threshold must be >= 0");
  const double sj = family.sigma(j);
  return family.variance(j) * tails::second_moment(family.shape(), threshold / sj);
}

/// int_{|x|>threshold} |x|^order dF_j(x).
inline IntegralResult tail_abs_moment(const SummandFamily& family, std::int64_t j, double threshold,
                                      double order, const QuadratureOptions& opts = {}) {
  if (!(threshold >= 0.0)) throw DomainError("tail threshold must be >= 0");
  const double sj = family.sigma(j);
  const double scale = std::pow(sj, order);
  QuadratureOptions scaled = opts;
  scaled.abs_tol = opts.abs_tol / scale;
  return scale * tails::abs_moment(family.shape(), threshold / sj, order, scaled);
}

/// int_{|x|>threshold} |x| |F_j(x) - Phi_j(x)| dx with Phi_j the matched normal.
inline IntegralResult rotar_tail_integral(const SummandFamily& family, std::int64_t j, double threshold,
                                          const QuadratureOptions& opts = {}) {
  if (!(threshold >= 0.0)) throw DomainError("tail threshold must be >= 0");
  const double sj = family.sigma(j);
  const double scale = family.variance(j);
  QuadratureOptions scaled = opts;
  scaled.abs_tol = opts.abs_tol / scale;
  return scale * tails::rotar(family.shape(), threshold / sj, scaled);
}

}  // namespace rotarclt
