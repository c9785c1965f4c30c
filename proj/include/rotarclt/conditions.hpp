#pragma once

// The classical CLT functionals (Lyapunov, Lindeberg, Feller, asymptotic
// infinitesimality, Rotar), their index-averaged counterparts, and the audit
// of the inequalities linking them.
//
// Every functional is written in terms of the variance shares
// w_j = sigma_j^2 / B_n^2 and the standardized thresholds c_j = eps / sqrt(w_j),
// so nothing overflows for exploding-variance families. For those families the
// leading summands whose combined share is below kNegligibleShare are skipped
// and their worst-case contribution is added to the error bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rotarclt/dist_model.hpp"
#include "rotarclt/errors.hpp"
#include "rotarclt/normal.hpp"
#include "rotarclt/parallel.hpp"
#include "rotarclt/random_index.hpp"
#include "rotarclt/tail_integrals.hpp"

namespace rotarclt {

enum class Condition {
  kLyapunov,
  kLindeberg,
  kFeller,
  kInfinitesimality,
  kRotar,
  kRandomLindeberg,
  kRandomFeller,
  kRandomRotar,
};

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kLyapunov: return "lyapunov";
    case Condition::kLindeberg: return "lindeberg";
    case Condition::kFeller: return "feller";
    case Condition::kInfinitesimality: return "infinitesimality";
    case Condition::kRotar: return "rotar";
    case Condition::kRandomLindeberg: return "random_lindeberg";
    case Condition::kRandomFeller: return "random_feller";
    case Condition::kRandomRotar: return "random_rotar";
  }
  return "?";
}

struct ConditionReport {
  Condition condition;
  std::int64_t n = 0;  ///< outer n for the randomized functionals
  std::optional<double> epsilon;
  std::optional<double> delta;
  double value = 0.0;
  double error_bound = 0.0;
};

/// Normalization of the Rotar sum. kVariance divides by B_n^2, which keeps the
/// functional dimensionless and dominated by Lindeberg plus a normal tail.
/// kDeviation divides by B_n only.
enum class RotarScale { kVariance, kDeviation };

inline std::string_view to_string(RotarScale s) {
  return s == RotarScale::kVariance ? "variance" : "deviation";
}

struct ConditionOptions {
  QuadratureOptions quadrature;
  RotarScale rotar_scale = RotarScale::kVariance;
  unsigned threads = 0;  ///< 0 = default_thread_count()
};

namespace detail {

inline constexpr double kNegligibleShare = 1e-18;

inline void require_n(std::int64_t n) {
  if (n < 1) throw DomainError("condition functionals need n >= 1");
}
inline void require_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("epsilon must be finite and > 0");
}

/// Which summands enter a per-j sum over j <= n.
struct SummandRange {
  std::int64_t first = 1;
  std::int64_t multiplicity = 1;   ///< i.i.d.: one representative term counted n times
  double skipped_share = 0.0;      ///< B_{first-1}^2 / B_n^2
};

inline SummandRange summand_range(const SummandFamily& family, std::int64_t n, bool allow_skip = true) {
  if (family.identically_distributed()) return {n, n, 0.0};
  SummandRange r;
  if (!allow_skip || family.prefix_share(n - 1, n) < kNegligibleShare) return r;
  // Largest m with prefix_share(m, n) < kNegligibleShare.
  std::int64_t lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (family.prefix_share(mid, n) < kNegligibleShare ? lo : hi) = mid;
  }
  r.first = lo + 1;
  r.skipped_share = family.prefix_share(lo, n);
  return r;
}

/// Sums term(j, w_j) -> {value, error} over the summand range in index order.
template <class Term>
std::pair<double, double> sum_over_summands(const SummandFamily& family, std::int64_t n,
                                            const SummandRange& range, Term&& term, unsigned threads) {
  const auto count = static_cast<std::size_t>(n - range.first + 1);
  std::vector<std::pair<double, double>> parts(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        const std::int64_t j = range.first + static_cast<std::int64_t>(i);
        parts[i] = term(j, family.variance_share(j, n));
      },
      count > 1 ? threads : 1);
  double value = 0.0, error = 0.0;
  for (const auto& [v, e] : parts) {
    value += v;
    error += e;
  }
  const auto m = static_cast<double>(range.multiplicity);
  return {m * value, m * error};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Non-random functionals
// ---------------------------------------------------------------------------

/// B_n^{-(2+delta)} sum_j E|X_j|^{2+delta}.
inline ConditionReport lyapunov(const SummandFamily& family, std::int64_t n, double delta,
                                const ConditionOptions& opts = {}) {
  detail::require_n(n);
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
  const double order = 2.0 + delta;
  const double moment = shape::abs_moment(family.shape(), order);
  const auto range = detail::summand_range(family, n);
  auto term = [&](std::int64_t, double w) {
    return std::pair{std::pow(w, 1.0 + 0.5 * delta) * moment, 0.0};
  };
  auto [value, error] = detail::sum_over_summands(family, n, range, term, opts.threads);
  // Skipped terms: w^{1+delta/2} <= w.
  error += moment * range.skipped_share;
  return {Condition::kLyapunov, n, std::nullopt, delta, value, error};
}

/// B_n^{-2} sum_j int_{|x| > eps B_n} x^2 dF_j.
inline ConditionReport lindeberg(const SummandFamily& family, std::int64_t n, double epsilon,
                                 const ConditionOptions& opts = {}) {
  detail::require_n(n);
  detail::require_epsilon(epsilon);
  const auto range = detail::summand_range(family, n);
  auto term = [&](std::int64_t, double w) {
    const auto t = tails::second_moment(family.shape(), epsilon / std::sqrt(w));
    return std::pair{w * t.value, w * t.error_estimate};
  };
  auto [value, error] = detail::sum_over_summands(family, n, range, term, opts.threads);
  error += range.skipped_share;
  return {Condition::kLindeberg, n, epsilon, std::nullopt, value, error};
}

/// max_{j <= n} sigma_j^2 / B_n^2. Variances never decrease in j for the
/// built-in families, so the maximum sits at j = n.
inline ConditionReport feller(const SummandFamily& family, std::int64_t n) {
  detail::require_n(n);
  return {Condition::kFeller, n, std::nullopt, std::nullopt, family.variance_share(n, n), 0.0};
}

/// P(max_{j <= n} |X_j| > eps B_n) = 1 - prod_j (1 - P(|X_j| > eps B_n)).
inline ConditionReport infinitesimality(const SummandFamily& family, std::int64_t n, double epsilon,
                                        const ConditionOptions& opts = {}) {
  detail::require_n(n);
  detail::require_epsilon(epsilon);
  const auto range = detail::summand_range(family, n);
  auto term = [&](std::int64_t, double w) {
    const double p = shape::exceedance(family.shape(), epsilon / std::sqrt(w));
    return std::pair{p >= 1.0 ? -INFINITY : std::log1p(-p), 0.0};
  };
  const auto [log_keep, unused] = detail::sum_over_summands(family, n, range, term, opts.threads);
  const double value = std::max(0.0, -std::expm1(log_keep));  // avoids -0
  // Skipped summands: union bound plus Chebyshev, P(|X_j| > eps B_n) <= w_j / eps^2.
  const double error = range.skipped_share / (epsilon * epsilon);
  return {Condition::kInfinitesimality, n, epsilon, std::nullopt, value, error};
}

/// Rotar sum  sum_j int_{|x| > eps B_n} |x| |F_j(x) - Phi_j(x)| dx, divided by
/// B_n^2 (default) or B_n (RotarScale::kDeviation).
inline ConditionReport rotar(const SummandFamily& family, std::int64_t n, double epsilon,
                             const ConditionOptions& opts = {}) {
  detail::require_n(n);
  detail::require_epsilon(epsilon);
  if (family.all_normal()) return {Condition::kRotar, n, epsilon, std::nullopt, 0.0, 0.0};
  const bool deviation = opts.rotar_scale == RotarScale::kDeviation;
  const auto range = detail::summand_range(family, n, !deviation);
  auto term = [&](std::int64_t, double w) {
    const auto r = tails::rotar(family.shape(), epsilon / std::sqrt(w), opts.quadrature);
    return std::pair{w * r.value, w * r.error_estimate};
  };
  auto [value, error] = detail::sum_over_summands(family, n, range, term, opts.threads);
  // int_{|u|>c} |u||F - Phi| du <= (E Y^2 + E Z^2) / 2 = 1 for each skipped summand.
  error += range.skipped_share;
  if (deviation) {
    const double b = family.partial_variance(n).b;
    value *= b;
    error *= b;
  }
  return {Condition::kRotar, n, epsilon, std::nullopt, value, error};
}

/// int_{|x| > eps B_n / sigma*} x^2 dPhi(x), sigma* = max_{j <= n} sigma_j.
inline double normal_tail_majorant(const SummandFamily& family, std::int64_t n, double epsilon) {
  return normal::tail_second_moment(epsilon / std::sqrt(family.variance_share(n, n)));
}

// ---------------------------------------------------------------------------
// Index-averaged functionals
// ---------------------------------------------------------------------------

namespace detail {

/// E over nu of a per-k report; the per-k error bounds are averaged too.
template <class PerK>
std::pair<double, double> average_over_index(const RandomIndexModel& model, PerK&& per_k, double abs_bound,
                                             unsigned threads) {
  const auto& pmf = model.support_pmf();
  std::vector<std::pair<double, double>> values(pmf.size());
  parallel_for(
      pmf.size(),
      [&](std::size_t i) {
        if (pmf[i] > 0.0) values[i] = per_k(model.first() + static_cast<std::int64_t>(i));
      },
      threads);
  const auto at = [&](std::int64_t k) -> const std::pair<double, double>& {
    return values[static_cast<std::size_t>(k - model.first())];
  };
  const auto value = expect_over_index(model, [&](std::int64_t k) { return at(k).first; }, abs_bound, 1);
  const auto error = expect_over_index(model, [&](std::int64_t k) { return at(k).second; }, 0.0, 1);
  return {value.value, error.value + value.truncation_error_bound};
}

inline ConditionOptions inner(const ConditionOptions& opts) {
  ConditionOptions o = opts;
  o.threads = 1;
  return o;
}

}  // namespace detail

/// E_nu[ lindeberg(nu, eps) ]; each term lies in [0, 1].
inline ConditionReport random_lindeberg(const SummandFamily& family, const RandomIndexModel& model,
                                        double epsilon, const ConditionOptions& opts = {}) {
  detail::require_epsilon(epsilon);
  const auto in = detail::inner(opts);
  auto [value, error] = detail::average_over_index(
      model,
      [&](std::int64_t k) {
        const auto r = lindeberg(family, k, epsilon, in);
        return std::pair{r.value, r.error_bound};
      },
      1.0, opts.threads);
  return {Condition::kRandomLindeberg, model.outer_n(), epsilon, std::nullopt, value, error};
}

/// E_nu[ feller(nu) ]; each term lies in [0, 1].
inline ConditionReport random_feller(const SummandFamily& family, const RandomIndexModel& model,
                                     const ConditionOptions& opts = {}) {
  auto [value, error] = detail::average_over_index(
      model, [&](std::int64_t k) { return std::pair{feller(family, k).value, 0.0}; }, 1.0, opts.threads);
  return {Condition::kRandomFeller, model.outer_n(), std::nullopt, std::nullopt, value, error};
}

/// E_nu[ rotar(nu, eps) ]. Under the variance scale every term is at most
/// lindeberg + normal tail <= 2, which certifies the truncation. The deviation
/// scale has no such bound and is only accepted for finite-support indices.
inline ConditionReport random_rotar(const SummandFamily& family, const RandomIndexModel& model, double epsilon,
                                    const ConditionOptions& opts = {}) {
  detail::require_epsilon(epsilon);
  if (opts.rotar_scale == RotarScale::kDeviation && model.truncation_tail_mass() > 0.0) {
    throw ConfigError("deviation-scaled random Rotar needs an index with finite support");
  }
  if (family.all_normal()) {
    return {Condition::kRandomRotar, model.outer_n(), epsilon, std::nullopt, 0.0, 0.0};
  }
  const auto in = detail::inner(opts);
  auto [value, error] = detail::average_over_index(
      model,
      [&](std::int64_t k) {
        const auto r = rotar(family, k, epsilon, in);
        return std::pair{r.value, r.error_bound};
      },
      2.0, opts.threads);
  return {Condition::kRandomRotar, model.outer_n(), epsilon, std::nullopt, value, error};
}

// ---------------------------------------------------------------------------
// Implication audit
// ---------------------------------------------------------------------------

struct InequalityCheck {
  std::string id;           ///< "a", "b", "c", "d_feller", "d_rotar"
  std::string statement;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_error = 0.0;
  double rhs_error = 0.0;
  double slack = 0.0;  ///< rhs - lhs
  bool passed = false;
};

struct AuditReport {
  std::string family;
  std::string index;
  std::int64_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<ConditionReport> reports;
  std::vector<InequalityCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

namespace detail {

inline InequalityCheck make_check(std::string id, std::string statement, double lhs, double lhs_error,
                                  double rhs, double rhs_error) {
  InequalityCheck c{std::move(id), std::move(statement), lhs, rhs, lhs_error, rhs_error, rhs - lhs, false};
  c.passed = c.slack >= -(lhs_error + rhs_error);
  return c;
}

}  // namespace detail

/// Checks, with combined error bounds,
///   (a) lindeberg <= eps^{-delta} lyapunov
///   (b) feller <= eps^2 + lindeberg
///   (c) rotar <= lindeberg + int_{|x| > eps B_n / sigma*} x^2 dPhi
///   (d) the index-averaged forms of (b) and (c).
inline AuditReport implication_audit(const SummandFamily& family, const RandomIndexModel& model, std::int64_t n,
                                     double epsilon, double delta, const ConditionOptions& opts = {}) {
  AuditReport audit;
  audit.family = family.spec();
  audit.index = model.spec();
  audit.n = n;
  audit.epsilon = epsilon;
  audit.delta = delta;

  const auto lyap = lyapunov(family, n, delta, opts);
  const auto lind = lindeberg(family, n, epsilon, opts);
  const auto fell = feller(family, n);
  const auto infin = infinitesimality(family, n, epsilon, opts);
  const auto rot = rotar(family, n, epsilon, opts);
  const auto rlind = random_lindeberg(family, model, epsilon, opts);
  const auto rfell = random_feller(family, model, opts);
  const auto rrot = random_rotar(family, model, epsilon, opts);
  audit.reports = {lyap, lind, fell, infin, rot, rlind, rfell, rrot};

  const double eps2 = epsilon * epsilon;
  const double markov = std::pow(epsilon, -delta);
  audit.checks.push_back(detail::make_check("a", "lindeberg <= eps^-delta * lyapunov", lind.value, lind.error_bound,
                                            markov * lyap.value, markov * lyap.error_bound));
  audit.checks.push_back(detail::make_check("b", "feller <= eps^2 + lindeberg", fell.value, fell.error_bound,
                                            eps2 + lind.value, lind.error_bound));
  audit.checks.push_back(detail::make_check("c", "rotar <= lindeberg + normal_tail(eps B_n / sigma*)", rot.value,
                                            rot.error_bound,
                                            lind.value + normal_tail_majorant(family, n, epsilon),
                                            lind.error_bound));
  audit.checks.push_back(detail::make_check("d_feller", "random_feller <= eps^2 + random_lindeberg", rfell.value,
                                            rfell.error_bound, eps2 + rlind.value, rlind.error_bound));
  const auto tail = expect_over_index(
      model, [&](std::int64_t k) { return normal_tail_majorant(family, k, epsilon); }, 1.0, opts.threads);
  audit.checks.push_back(detail::make_check(
      "d_rotar", "random_rotar <= random_lindeberg + E normal_tail(eps B_nu / sigma*_nu)", rrot.value,
      rrot.error_bound, rlind.value + tail.value, rlind.error_bound + tail.truncation_error_bound));
  return audit;
}

}  // namespace rotarclt
