#pragma once

// Smooth-function metric |E f(S_nu / B_nu) - E f(Z)| and its large-O and
// small-o audits.
//
// The large-O audit compares the metric with K * E[B_nu^{-(1+alpha)}] up to a
// constant fitted on the first half of the grid. The small-o audit tracks
// r(n) = metric / E[B_nu^{-1}], which should go to 0 when the random Rotar
// functional does.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotarclt/conditions.hpp"
#include "rotarclt/dist_model.hpp"
#include "rotarclt/gauss_kronrod.hpp"
#include "rotarclt/monte_carlo.hpp"
#include "rotarclt/normal.hpp"
#include "rotarclt/random_index.hpp"

namespace rotarclt {

struct Lipschitz {
  double alpha = 1.0;
  double K = 0.0;
};

/// Bounded C^1 test function with its derivative and norms.
struct TestFunction {
  std::string id;
  std::function<double(double)> evaluate;
  std::function<double(double)> derivative;
  double sup_norm = 0.0;
  double derivative_sup_norm = 0.0;
  std::optional<Lipschitz> lipschitz;  ///< of the derivative
};

namespace test_functions {

inline TestFunction sine() {
  return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, 1.0, 1.0,
          Lipschitz{1.0, 1.0}};
}

/// cos(2x): even, so its metric does not vanish for symmetric summands.
inline TestFunction cos2() {
  return {"cos2", [](double x) { return std::cos(2.0 * x); }, [](double x) { return -2.0 * std::sin(2.0 * x); },
          1.0, 2.0, Lipschitz{1.0, 4.0}};
}

/// x / (1 + x^2). sup |f| = 1/2 at x = 1, sup |f'| = 1 at x = 0, and
/// f''(x) = 2x(x^2 - 3) / (1 + x^2)^3 peaks in absolute value at sqrt(2) - 1.
inline TestFunction clamp() {
  const double x0 = std::numbers::sqrt2 - 1.0;
  const double s = 1.0 + x0 * x0;
  const double K = std::abs(2.0 * x0 * (x0 * x0 - 3.0) / (s * s * s));
  return {"clamp", [](double x) { return x / (1.0 + x * x); },
          [](double x) {
            const double s = 1.0 + x * x;
            return (1.0 - x * x) / (s * s);
          },
          0.5, 1.0, Lipschitz{1.0, K}};
}

/// (1 - x^2)^2 on [-1, 1], zero outside. sup |f'| = 8 / (3 sqrt 3) at
/// x = 1/sqrt 3; f'' ranges over [-4, 8].
inline TestFunction bump() {
  return {"bump", [](double x) { return std::abs(x) < 1.0 ? (1.0 - x * x) * (1.0 - x * x) : 0.0; },
          [](double x) { return std::abs(x) < 1.0 ? -4.0 * x * (1.0 - x * x) : 0.0; },
          1.0, 8.0 / (3.0 * std::sqrt(3.0)), Lipschitz{1.0, 8.0}};
}

inline TestFunction constant(double c = 1.0) {
  return {"const", [c](double) { return c; }, [](double) { return 0.0; }, std::abs(c), 0.0, Lipschitz{1.0, 0.0}};
}

inline std::vector<TestFunction> builtin() { return {sine(), cos2(), clamp(), bump()}; }

inline TestFunction by_id(std::string_view id) {
  for (auto& f : builtin()) {
    if (f.id == id) return f;
  }
  if (id == "const") return constant();
  throw ConfigError("unknown test function '" + std::string(id) + "'");
}

}  // namespace test_functions

// ---------------------------------------------------------------------------
// Modulus of continuity
// ---------------------------------------------------------------------------

struct ModulusResult {
  double value = 0.0;           ///< attained by an explicit pair, so a lower bound
  double error_estimate = 0.0;  ///< change under the final refinement
};

namespace detail {

/// Best of (a) max - min over windows of `width` consecutive grid points and
/// (b) |g(x + eps) - g(x)| at every grid point x. Returns the value and the
/// left end of the best window.
inline std::pair<double, double> scan_oscillation(const std::function<double(double)>& g, double lo, double hi,
                                                  double h, std::size_t width, double eps) {
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / h)) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = g(lo + static_cast<double>(i) * h);
  std::deque<std::size_t> maxq, minq;
  double best = 0.0, where = lo;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = lo + static_cast<double>(i) * h;
    while (!maxq.empty() && values[maxq.back()] <= values[i]) maxq.pop_back();
    while (!minq.empty() && values[minq.back()] >= values[i]) minq.pop_back();
    maxq.push_back(i);
    minq.push_back(i);
    if (maxq.front() + width <= i) maxq.pop_front();
    if (minq.front() + width <= i) minq.pop_front();
    const double range = values[maxq.front()] - values[minq.front()];
    if (range > best) {
      best = range;
      where = lo + static_cast<double>(i + 1 >= width ? i + 1 - width : 0) * h;
    }
    const double pair = std::abs(g(x + eps) - values[i]);
    if (pair > best) {
      best = pair;
      where = x;
    }
  }
  return {best, where};
}

}  // namespace detail

/// omega(g; eps) = sup_{|x-y| < eps} |g(x) - g(y)| over the probe domain
/// [-half_width, half_width]. For continuous g this equals the supremum over
/// |x-y| <= eps, so pairs at distance exactly eps are included. A coarse scan
/// locates the best window, which is then rescanned twice, 32 times finer each
/// time.
inline ModulusResult modulus_of_continuity(const std::function<double(double)>& g, double eps,
                                           double half_width = 8.0) {
  if (!(eps > 0.0)) throw DomainError("modulus of continuity needs eps > 0");
  constexpr double kMaxPoints = 4e6;
  double step = std::max(eps / 64.0, 2.0 * half_width / kMaxPoints);
  // A window of w points spans (w - 1) * step < eps.
  auto window = [eps](double h) { return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(eps / h))); };
  auto [best, at] = detail::scan_oscillation(g, -half_width, half_width, step, window(step), eps);
  double previous = best;
  for (int level = 0; level < 2; ++level) {
    const double lo = std::max(-half_width, at - 2.0 * step);
    const double hi = std::min(half_width, at + eps + 2.0 * step);
    step /= 32.0;
    const auto [fine, where] = detail::scan_oscillation(g, lo, hi, step, window(step), eps);
    previous = best;
    if (fine > best) {
      best = fine;
      at = where;
    }
  }
  return {best, best - previous};
}

// ---------------------------------------------------------------------------
// Smooth metric
// ---------------------------------------------------------------------------

/// E f(Z) by Gauss-Kronrod on [-12, 12]; the discarded tails weigh at most
/// sup|f| * P(|Z| > 12).
inline IntegralResult expected_under_standard_normal(const TestFunction& f, double abs_tol = 1e-12) {
  constexpr double kCut = 12.0;
  std::vector<double> breaks{-kCut};
  // Kinks of compactly supported functions.
  if (f.id == "bump") {
    breaks.push_back(-1.0);
    breaks.push_back(1.0);
  }
  breaks.push_back(kCut);
  auto integrand = [&f](double x) { return f.evaluate(x) * normal::pdf(x); };
  IntegralResult r = integrate_pieces(integrand, breaks, {abs_tol, 10000});
  r.error_estimate += f.sup_norm * normal::two_sided_tail(kCut);
  return r;
}

struct SmoothMetric {
  double metric = 0.0;  ///< |MC mean of f - E f(Z)|
  double mc_stderr = 0.0;
  double mc_mean = 0.0;
  double reference = 0.0;
};

inline SmoothMetric smooth_metric(const SummandFamily& family, const RandomIndexModel& model, const TestFunction& f,
                                  std::int64_t trials, std::uint64_t seed, const SimOptions& opts = {}) {
  const RawDraws raw = draw_normalized_sums(family, model, trials, seed, opts);
  double sum = 0.0;
  for (double v : raw.values) sum += f.evaluate(v);
  const double mean = sum / static_cast<double>(trials);
  double ss = 0.0;
  for (double v : raw.values) {
    const double d = f.evaluate(v) - mean;
    ss += d * d;
  }
  SmoothMetric m;
  m.mc_mean = mean;
  // A constant has a known expectation; quadrature would only add rounding.
  m.reference = f.derivative_sup_norm == 0.0 ? f.evaluate(0.0) : expected_under_standard_normal(f).value;
  m.metric = std::abs(mean - m.reference);
  const double variance = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;
  m.mc_stderr = std::sqrt(variance / static_cast<double>(trials));
  return m;
}

// ---------------------------------------------------------------------------
// Rate curves
// ---------------------------------------------------------------------------

struct LogLogFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();  ///< RMS in log space
  std::size_t points = 0;
};

inline LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  LogLogFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  fit.points = lx.size();
  if (lx.size() < 2) return fit;
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / m;
    my += ly[i] / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / m);
  return fit;
}

struct Majorant {
  double epsilon = 0.0;
  double value = 0.0;  ///< eps + random_rotar(eps)
};

struct RatePoint {
  std::int64_t n = 0;
  double metric = 0.0;
  double mc_stderr = 0.0;
  double bound = 0.0;  ///< large-O: K E[B^{-(1+alpha)}]; small-o: E[B^{-1}]
  double ratio = 0.0;  ///< metric / bound
  double m1_prefix = 0.0;  ///< sum_{j<=n} [E|X_j| + E|X*_j| + 2 sigma_j^2]
  double m2_prefix = 0.0;  ///< sum_{j<=n} [E|X_j| + E|X*_j|]
  /// K E[M1(nu) B_nu^{-2}], the per-n rate bound (alpha = 1 only).
  std::optional<double> theorem_bound;
  std::vector<Majorant> majorants;  ///< small-o only
};

struct RateCurve {
  std::vector<RatePoint> points;
  double fitted_order = std::numeric_limits<double>::quiet_NaN();  ///< slope of log metric vs log n
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  double bound_order = std::numeric_limits<double>::quiet_NaN();  ///< slope of log bound vs log n
  double fitted_constant = 0.0;  ///< large-O only
  bool within_bound = true;      ///< large-O: metric <= C bound + 4 stderr everywhere
  bool decreasing = true;        ///< small-o: r drops by more than 4 combined stderr at each step
};

inline constexpr double kNoiseSigmas = 4.0;

namespace detail {

/// log sum_{j<=n} sigma_j, in closed form.
inline double log_sum_of_sigmas(const SummandFamily& family, std::int64_t n) {
  const double log_s = std::log(family.base_sigma());
  const auto nn = static_cast<double>(n);
  if (family.identically_distributed()) return log_s + std::log(nn);
  const double log_q = 0.5 * std::log(family.ratio());
  return log_s + nn * log_q + std::log(-std::expm1(-nn * log_q)) - std::log(std::expm1(log_q));
}

inline void fill_prefix_sums(const SummandFamily& family, RatePoint& p) {
  const double m1 = shape::abs_moment(family.shape(), 1.0) + normal::kSqrt2OverPi;
  const double sigmas = std::exp(log_sum_of_sigmas(family, p.n));
  p.m2_prefix = m1 * sigmas;
  p.m1_prefix = p.m2_prefix + 2.0 * family.partial_variance(p.n).b_squared;
}

inline void fit_orders(RateCurve& curve) {
  std::vector<double> ns, metrics, ns_all, bounds;
  for (const auto& p : curve.points) {
    ns_all.push_back(static_cast<double>(p.n));
    bounds.push_back(p.bound);
    if (p.metric > kNoiseSigmas * p.mc_stderr) {
      ns.push_back(static_cast<double>(p.n));
      metrics.push_back(p.metric);
    }
  }
  const auto metric_fit = fit_log_log(ns, metrics);
  curve.fitted_order = metric_fit.slope;
  curve.fit_residual = metric_fit.residual;
  curve.bound_order = fit_log_log(ns_all, bounds).slope;
}

}  // namespace detail

/// Large-O audit. alpha defaults to the Lipschitz order of f'.
inline RateCurve large_o_audit(const SummandFamily& family, const IndexSpec& index, const TestFunction& f,
                               std::span<const std::int64_t> n_grid, std::int64_t trials, std::uint64_t seed,
                               std::optional<double> alpha = std::nullopt, const SimOptions& opts = {}) {
  if (!f.lipschitz) throw ConfigError("large-O audit needs a test function with Lipschitz derivative");
  if (n_grid.empty()) throw ConfigError("rate audits need a nonempty n grid");
  const double a = alpha.value_or(f.lipschitz->alpha);
  if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  const double K = f.lipschitz->K;
  const double s1 = family.base_sigma();
  RateCurve curve;
  for (std::int64_t n : n_grid) {
    const auto model = index.model_for(n);
    const auto m = smooth_metric(family, model, f, trials, seed, opts);
    RatePoint p;
    p.n = n;
    p.metric = m.metric;
    p.mc_stderr = m.mc_stderr;
    // B_k >= sigma_1 bounds the integrand on the truncated tail.
    const auto inv = expect_over_index(
        model, [&](std::int64_t k) { return std::exp(-0.5 * (1.0 + a) * family.log_b_squared(k)); },
        std::pow(s1, -(1.0 + a)), opts.threads);
    p.bound = K * inv.value;
    p.ratio = p.bound > 0.0 ? p.metric / p.bound : std::numeric_limits<double>::infinity();
    detail::fill_prefix_sums(family, p);
    if (a == 1.0) {
      // M1(k) / B_k^2 <= m1 sum sigma_j / B_k^2 + 2 <= m1 / sigma_1 + 2.
      const double m1 = shape::abs_moment(family.shape(), 1.0) + normal::kSqrt2OverPi;
      const auto theorem = expect_over_index(
          model,
          [&](std::int64_t k) {
            const double log_b2 = family.log_b_squared(k);
            return m1 * std::exp(detail::log_sum_of_sigmas(family, k) - log_b2) + 2.0;
          },
          m1 / s1 + 2.0, opts.threads);
      p.theorem_bound = K * theorem.value;
    }
    curve.points.push_back(std::move(p));
  }
  detail::fit_orders(curve);
  // Constant fitted on the first half of the grid, above the noise floor.
  const std::size_t half = std::max<std::size_t>(1, (curve.points.size() + 1) / 2);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    const auto& p = curve.points[i];
    if (p.metric > kNoiseSigmas * p.mc_stderr) {
      num += p.metric * p.bound;
      den += p.bound * p.bound;
    }
  }
  curve.fitted_constant = den > 0.0 ? num / den : 0.0;
  for (const auto& p : curve.points) {
    if (p.metric > curve.fitted_constant * p.bound + kNoiseSigmas * p.mc_stderr) curve.within_bound = false;
  }
  return curve;
}

/// Small-o audit: r(n) = metric / E[B_nu^{-1}] with the majorant
/// eps + random_rotar(eps) for each eps.
inline RateCurve small_o_audit(const SummandFamily& family, const IndexSpec& index, const TestFunction& f,
                               std::span<const std::int64_t> n_grid, std::span<const double> epsilon_grid,
                               std::int64_t trials, std::uint64_t seed, const SimOptions& opts = {},
                               const ConditionOptions& condition_opts = {}) {
  if (n_grid.empty()) throw ConfigError("rate audits need a nonempty n grid");
  const double s1 = family.base_sigma();
  RateCurve curve;
  for (std::int64_t n : n_grid) {
    const auto model = index.model_for(n);
    const auto m = smooth_metric(family, model, f, trials, seed, opts);
    RatePoint p;
    p.n = n;
    const auto inv = expect_over_index(
        model, [&](std::int64_t k) { return std::exp(-0.5 * family.log_b_squared(k)); }, 1.0 / s1, opts.threads);
    p.bound = inv.value;
    p.metric = m.metric;
    p.mc_stderr = m.mc_stderr;
    p.ratio = p.metric / p.bound;
    detail::fill_prefix_sums(family, p);
    for (double eps : epsilon_grid) {
      p.majorants.push_back({eps, eps + random_rotar(family, model, eps, condition_opts).value});
    }
    curve.points.push_back(std::move(p));
  }
  detail::fit_orders(curve);
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    const double sa = a.mc_stderr / a.bound;
    const double sb = b.mc_stderr / b.bound;
    if (!(a.ratio - b.ratio > kNoiseSigmas * std::sqrt(sa * sa + sb * sb))) curve.decreasing = false;
  }
  return curve;
}

}  // namespace rotarclt
