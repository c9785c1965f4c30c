#pragma once

// Monte Carlo for normalized random sums S_nu / B_nu.
//
// Trial t draws its index from stream (seed, kIndex, t) and its summands from
// stream (seed, kSummands, t). Results are written to slot t and reduced in
// trial order, so a run is a pure function of its inputs and the thread count
// never shows up in the output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "rotarclt/dist_model.hpp"
#include "rotarclt/errors.hpp"
#include "rotarclt/normal.hpp"
#include "rotarclt/parallel.hpp"
#include "rotarclt/random_index.hpp"
#include "rotarclt/rng.hpp"

namespace rotarclt {

struct SimOptions {
  unsigned threads = 0;
  /// Overrides the seed of the summand streams only. Index draws keep using
  /// the main seed, which is how index/summand independence is tested.
  std::optional<std::uint64_t> summand_seed;
};

struct RawDraws {
  std::vector<double> values;         ///< trial order
  std::vector<std::int64_t> indices;  ///< realized nu per trial
};

/// One normalized random sum per trial, in trial order.
inline RawDraws draw_normalized_sums(const SummandFamily& family, const RandomIndexModel& model,
                                     std::int64_t trials, std::uint64_t seed, const SimOptions& opts = {}) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  RawDraws out;
  out.values.resize(static_cast<std::size_t>(trials));
  out.indices.resize(static_cast<std::size_t>(trials));
  const std::uint64_t summand_seed = opts.summand_seed.value_or(seed);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        RandomStream index_stream(seed, StreamLane::kIndex, t);
        const std::int64_t k = model.sample(index_stream);
        RandomStream summand_stream(summand_seed, StreamLane::kSummands, t);
        out.indices[t] = k;
        out.values[t] = family.normalized_sum(k, summand_stream);
      },
      opts.threads);
  return out;
}

struct EmpiricalSample {
  std::vector<double> values;  ///< sorted ascending
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::map<std::int64_t, std::int64_t> index_histogram;
  double mean = 0.0;      ///< over trials, in trial order
  double variance = 0.0;  ///< unbiased
};

inline EmpiricalSample simulate(const SummandFamily& family, const RandomIndexModel& model, std::int64_t trials,
                                std::uint64_t seed, const SimOptions& opts = {}) {
  RawDraws raw = draw_normalized_sums(family, model, trials, seed, opts);
  EmpiricalSample s;
  s.trials = trials;
  s.seed = seed;
  for (std::int64_t k : raw.indices) ++s.index_histogram[k];
  double sum = 0.0;
  for (double v : raw.values) sum += v;
  s.mean = sum / static_cast<double>(trials);
  double ss = 0.0;
  for (double v : raw.values) ss += (v - s.mean) * (v - s.mean);
  s.variance = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;
  s.values = std::move(raw.values);
  std::sort(s.values.begin(), s.values.end());
  return s;
}

// ---------------------------------------------------------------------------
// Kolmogorov distance
// ---------------------------------------------------------------------------

inline constexpr double kDefaultConfidence = 0.999;

/// Half-width of the DKW band: sqrt(ln(2 / (1 - gamma)) / (2m)).
inline double dkw_band(std::int64_t trials, double confidence = kDefaultConfidence) {
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(trials)));
}

/// Asymptotic P(sqrt(m) D_m > lambda) with Stephens' small-sample correction.
inline double ks_p_value(double d_hat, std::int64_t trials) {
  const double root = std::sqrt(static_cast<double>(trials));
  const double lambda = (root + 0.12 + 0.11 / root) * d_hat;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KolmogorovEstimate {
  double d_hat = 0.0;
  double dkw_band = 0.0;
  double p_value = 1.0;
  std::int64_t trials = 0;
};

/// sup_x |F_m(x) - Phi(x)| for a sorted sample.
inline double ks_statistic(std::span<const double> sorted) {
  const auto m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = normal::cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - phi, phi - static_cast<double>(i) / m});
  }
  return d;
}

inline KolmogorovEstimate kolmogorov_distance(const EmpiricalSample& sample,
                                              double confidence = kDefaultConfidence) {
  if (sample.values.empty()) throw DomainError("kolmogorov_distance needs a nonempty sample");
  KolmogorovEstimate k;
  k.trials = static_cast<std::int64_t>(sample.values.size());
  k.d_hat = ks_statistic(sample.values);
  k.dkw_band = dkw_band(k.trials, confidence);
  k.p_value = ks_p_value(k.d_hat, k.trials);
  return k;
}

// ---------------------------------------------------------------------------
// Normalization identities
// ---------------------------------------------------------------------------

struct MomentCheck {
  double mean = 0.0;
  double variance = 0.0;
  double mean_tolerance = 0.0;      ///< 5 / sqrt(m)
  double variance_tolerance = 0.0;  ///< 10 / sqrt(m)
  bool mean_ok = false;
  bool variance_ok = false;
  bool ok() const { return mean_ok && variance_ok; }
};

inline MomentCheck normalization_check(const EmpiricalSample& sample) {
  MomentCheck c;
  const double root = std::sqrt(static_cast<double>(sample.trials));
  c.mean = sample.mean;
  c.variance = sample.variance;
  c.mean_tolerance = 5.0 / root;
  c.variance_tolerance = 10.0 / root;
  c.mean_ok = std::abs(c.mean) <= c.mean_tolerance;
  c.variance_ok = std::abs(c.variance - 1.0) <= c.variance_tolerance;
  return c;
}

// ---------------------------------------------------------------------------
// Characteristic-function identity for normal summands
// ---------------------------------------------------------------------------

struct CfPoint {
  double t = 0.0;
  double mixture = 0.0;  ///< sum_k P(nu = k) E exp(i t S*_k / B_k)
  double target = 0.0;   ///< exp(-t^2 / 2)
  double deviation = 0.0;
};

struct CfCheck {
  std::vector<CfPoint> points;
  double max_deviation = 0.0;
  double truncation_tail_mass = 0.0;
};

/// For normal summands with the family's variances, S*_k / B_k has cf
/// exp(-t^2 / (2 B_k^2) * sum_{j<=k} sigma_j^2). The mixture over nu is
/// compared with exp(-t^2 / 2).
inline CfCheck cf_identity_check(const SummandFamily& family, const RandomIndexModel& model,
                                 std::span<const double> t_grid) {
  const auto& pmf = model.support_pmf();
  // Variance ratio per k: accumulated sum_j sigma_j^2 over B_k^2 taken as the
  // same accumulated sum. The sum is carried in units of 2^scale so it never
  // overflows; rescaling by a power of two is exact.
  std::vector<double> ratio(pmf.size());
  double accumulated = 0.0;
  int scale = 0;
  std::int64_t next_j = 1;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const std::int64_t k = model.first() + static_cast<std::int64_t>(i);
    for (; next_j <= k; ++next_j) {
      const double v = family.variance(next_j);
      accumulated += scale == 0 && std::isfinite(v) ? v
                                                    : std::exp(family.log_variance(next_j) - scale * std::numbers::ln2);
      if (!std::isfinite(accumulated)) throw NumericError("variance sum overflow in cf_identity_check");
      if (accumulated > 0x1p512) {
        accumulated = std::ldexp(accumulated, -512);
        scale += 512;
      }
    }
    const double b_squared = accumulated;
    ratio[i] = accumulated / b_squared;
  }
  CfCheck out;
  out.truncation_tail_mass = model.truncation_tail_mass();
  for (double t : t_grid) {
    CfPoint p;
    p.t = t;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      if (pmf[i] > 0.0) p.mixture += pmf[i] * std::exp(-0.5 * t * t * ratio[i]);
    }
    p.target = std::exp(-0.5 * t * t);
    p.deviation = std::abs(p.mixture - p.target);
    out.max_deviation = std::max(out.max_deviation, p.deviation);
    out.points.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepPoint {
  std::int64_t n = 0;
  KolmogorovEstimate estimate;
  MomentCheck moments;
};

/// One simulation per n, all with the same seed.
inline std::vector<SweepPoint> clt_sweep(const SummandFamily& family, const IndexSpec& index,
                                         std::span<const std::int64_t> n_grid, std::int64_t trials,
                                         std::uint64_t seed, const SimOptions& opts = {}) {
  if (n_grid.empty()) throw ConfigError("clt_sweep needs a nonempty n grid");
  std::vector<SweepPoint> out;
  for (std::int64_t n : n_grid) {
    const auto sample = simulate(family, index.model_for(n), trials, seed, opts);
    out.push_back({n, kolmogorov_distance(sample), normalization_check(sample)});
  }
  return out;
}

}  // namespace rotarclt
