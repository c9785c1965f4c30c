#pragma once

// Positive-integer random indices nu_n, independent of the summands.
//
// Each model stores its pmf on a truncated support {first, ..., last}. The
// support is cut at the first k whose cumulative mass reaches 1 - 1e-12 and
// the leftover mass is reported as truncation_tail_mass, so every
// pmf-weighted expectation is a finite sum with a certified error bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rotarclt/errors.hpp"
#include "rotarclt/parallel.hpp"
#include "rotarclt/rng.hpp"

namespace rotarclt {

enum class IndexKind { kDeterministic, kShiftedPoisson, kShiftedGeometric, kUniform };

inline std::string_view to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::kDeterministic: return "det";
    case IndexKind::kShiftedPoisson: return "poisson";
    case IndexKind::kShiftedGeometric: return "geometric";
    case IndexKind::kUniform: return "uniform";
  }
  return "?";
}

struct WeightedExpectation {
  double value = 0.0;
  double truncation_error_bound = 0.0;
  std::int64_t terms_used = 0;
};

inline constexpr double kTruncationMass = 1e-12;
inline constexpr std::int64_t kMaxSupportTerms = 10'000'000;

class RandomIndexModel {
 public:
  static RandomIndexModel deterministic(std::int64_t n) {
    if (n < 1) throw ConfigError("deterministic index needs n >= 1");
    RandomIndexModel m(IndexKind::kDeterministic, static_cast<double>(n));
    m.first_ = n;
    m.pmf_ = {1.0};
    m.finish(0.0);
    return m;
  }

  /// nu = 1 + Poisson(lambda).
  static RandomIndexModel shifted_poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("poisson index needs lambda > 0");
    RandomIndexModel m(IndexKind::kShiftedPoisson, lambda);
    m.first_ = 1;
    m.enumerate_until_mass([&](std::int64_t k) { return m.pmf_formula(k); });
    return m;
  }

  /// P(nu = k) = p (1-p)^{k-1}, k >= 1.
  static RandomIndexModel shifted_geometric(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("geometric index needs p in (0, 1]");
    RandomIndexModel m(IndexKind::kShiftedGeometric, p);
    m.first_ = 1;
    if (p == 1.0) {
      m.pmf_ = {1.0};
      m.finish(0.0);
      return m;
    }
    const double log_q = std::log1p(-p);
    const auto needed = static_cast<std::int64_t>(std::ceil(std::log(kTruncationMass) / log_q));
    if (needed > kMaxSupportTerms) throw NumericError("geometric index support exceeds the truncation cap");
    m.pmf_.reserve(static_cast<std::size_t>(needed));
    for (std::int64_t k = 1; k <= needed; ++k) m.pmf_.push_back(m.pmf_formula(k));
    // Exact tail: P(nu > K) = (1-p)^K.
    m.finish(std::exp(static_cast<double>(needed) * log_q));
    return m;
  }

  /// Uniform on {1, ..., n}.
  static RandomIndexModel uniform(std::int64_t n) {
    if (n < 1) throw ConfigError("uniform index needs n >= 1");
    if (n > kMaxSupportTerms) throw NumericError("uniform index support exceeds the truncation cap");
    RandomIndexModel m(IndexKind::kUniform, static_cast<double>(n));
    m.first_ = 1;
    m.pmf_.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    m.finish(0.0);
    return m;
  }

  /// Built-in kind parameterized by the outer n: Deterministic(n),
  /// 1 + Poisson(n), geometric with p = 1/n, uniform on {1..n}.
  static RandomIndexModel for_outer(IndexKind kind, std::int64_t n) {
    if (n < 1) throw ConfigError("outer index parameter n must be >= 1");
    switch (kind) {
      case IndexKind::kDeterministic: return deterministic(n);
      case IndexKind::kShiftedPoisson: return shifted_poisson(static_cast<double>(n));
      case IndexKind::kShiftedGeometric: return shifted_geometric(1.0 / static_cast<double>(n));
      case IndexKind::kUniform: return uniform(n);
    }
    throw ConfigError("unknown index kind");
  }

  IndexKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  std::int64_t first() const { return first_; }
  std::int64_t last() const { return first_ + static_cast<std::int64_t>(pmf_.size()) - 1; }
  std::int64_t support_size() const { return static_cast<std::int64_t>(pmf_.size()); }
  double truncation_tail_mass() const { return tail_mass_; }

  /// The n this model corresponds to under for_outer().
  std::int64_t outer_n() const {
    const double n = kind_ == IndexKind::kShiftedGeometric ? 1.0 / parameter_ : parameter_;
    return static_cast<std::int64_t>(std::llround(n));
  }

  /// Exact P(nu = k).
  double pmf(std::int64_t k) const {
    if (k < 1) return 0.0;
    return pmf_formula(k);
  }

  /// Tabulated pmf on the truncated support, indexed from first().
  const std::vector<double>& support_pmf() const { return pmf_; }

  /// P(nu <= K) by exact summation.
  double probability_at_most(std::int64_t K) const {
    double total = 0.0;
    for (std::int64_t k = 1; k <= K; ++k) total += pmf(k);
    return std::min(total, 1.0);
  }

  std::int64_t sample(RandomStream& stream) const {
    switch (kind_) {
      case IndexKind::kDeterministic: return first_;
      case IndexKind::kUniform:
        return 1 + static_cast<std::int64_t>(stream.uniform() * parameter_);
      case IndexKind::kShiftedGeometric: {
        if (parameter_ == 1.0) return 1;
        const double u = stream.uniform_positive();
        const auto k = 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-parameter_)));
        if (k > last()) throw NumericError("index draw beyond the truncated support");
        return k;
      }
      case IndexKind::kShiftedPoisson: {
        const double u = stream.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) throw NumericError("index draw beyond the truncated support");
        return first_ + static_cast<std::int64_t>(it - cdf_.begin());
      }
    }
    return first_;
  }

  /// Canonical grammar form, e.g. "poisson:5".
  std::string spec() const {
    std::ostringstream out;
    out.precision(17);
    out << to_string(kind_) << ':' << parameter_;
    return out.str();
  }

 private:
  RandomIndexModel(IndexKind kind, double parameter) : kind_(kind), parameter_(parameter) {}

  double pmf_formula(std::int64_t k) const {
    switch (kind_) {
      case IndexKind::kDeterministic: return k == first_ ? 1.0 : 0.0;
      case IndexKind::kUniform: return k <= static_cast<std::int64_t>(parameter_) ? 1.0 / parameter_ : 0.0;
      case IndexKind::kShiftedGeometric:
        if (parameter_ == 1.0) return k == 1 ? 1.0 : 0.0;
        return parameter_ * std::exp(static_cast<double>(k - 1) * std::log1p(-parameter_));
      case IndexKind::kShiftedPoisson: {
        const double m = static_cast<double>(k - 1);
        return std::exp(-parameter_ + m * std::log(parameter_) - std::lgamma(m + 1.0));
      }
    }
    return 0.0;
  }

  template <class Pmf>
  void enumerate_until_mass(Pmf&& pmf) {
    double cumulative = 0.0, compensation = 0.0;
    for (std::int64_t k = first_;; ++k) {
      if (static_cast<std::int64_t>(pmf_.size()) >= kMaxSupportTerms) {
        throw NumericError("index support exceeds the truncation cap");
      }
      const double p = pmf(k);
      pmf_.push_back(p);
      // Kahan summation keeps the tail estimate meaningful at 1e-12.
      const double y = p - compensation;
      const double t = cumulative + y;
      compensation = (t - cumulative) - y;
      cumulative = t;
      if (cumulative >= 1.0 - kTruncationMass) break;
    }
    finish(std::max(0.0, 1.0 - cumulative));
  }

  void finish(double tail_mass) {
    tail_mass_ = tail_mass;
    cdf_.resize(pmf_.size());
    double running = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      running += pmf_[i];
      cdf_[i] = running;
    }
  }

  IndexKind kind_;
  double parameter_;
  std::int64_t first_ = 1;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double tail_mass_ = 0.0;
};

/// E g(nu) over the truncated support. abs_bound must dominate |g| on the
/// discarded tail; the truncation error bound is tail_mass * abs_bound.
/// Terms are evaluated in parallel and summed in index order.
template <class G>
WeightedExpectation expect_over_index(const RandomIndexModel& model, G&& g, double abs_bound,
                                      unsigned threads = 0) {
  if (!std::isfinite(abs_bound) || abs_bound < 0.0) {
    throw DomainError("expect_over_index: abs_bound must be finite and >= 0");
  }
  const auto& pmf = model.support_pmf();
  std::vector<double> values(pmf.size(), 0.0);
  parallel_for(
      pmf.size(),
      [&](std::size_t i) {
        if (pmf[i] > 0.0) values[i] = g(model.first() + static_cast<std::int64_t>(i));
      },
      threads);
  WeightedExpectation out;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (pmf[i] > 0.0) {
      out.value += pmf[i] * values[i];
      ++out.terms_used;
    }
  }
  out.truncation_error_bound = model.truncation_tail_mass() * abs_bound;
  return out;
}

// ---------------------------------------------------------------------------
// Grammar: [index=]<kind>[:<param>]
// ---------------------------------------------------------------------------

/// A parsed index specification. Without a parameter the model follows the
/// outer n of a sweep; with one it is fixed (det:n, poisson:lambda,
/// geometric:p, uniform:n).
struct IndexSpec {
  IndexKind kind = IndexKind::kDeterministic;
  std::optional<double> parameter;

  RandomIndexModel model_for(std::int64_t n) const {
    if (!parameter) return RandomIndexModel::for_outer(kind, n);
    const double p = *parameter;
    switch (kind) {
      case IndexKind::kDeterministic: return RandomIndexModel::deterministic(as_count(p));
      case IndexKind::kShiftedPoisson: return RandomIndexModel::shifted_poisson(p);
      case IndexKind::kShiftedGeometric: return RandomIndexModel::shifted_geometric(p);
      case IndexKind::kUniform: return RandomIndexModel::uniform(as_count(p));
    }
    throw ConfigError("unknown index kind");
  }

  std::string spec() const {
    std::ostringstream out;
    out.precision(17);
    out << to_string(kind);
    if (parameter) out << ':' << *parameter;
    return out.str();
  }

  bool operator==(const IndexSpec&) const = default;

 private:
  static std::int64_t as_count(double p) {
    if (!(p >= 1.0) || p != std::floor(p)) throw ConfigError("index parameter must be a positive integer");
    return static_cast<std::int64_t>(p);
  }
};

inline IndexSpec parse_index(std::string_view text) {
  if (text.starts_with("index=")) text.remove_prefix(6);
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  IndexSpec spec;
  if (kind == "det" || kind == "deterministic") {
    spec.kind = IndexKind::kDeterministic;
  } else if (kind == "poisson") {
    spec.kind = IndexKind::kShiftedPoisson;
  } else if (kind == "geometric") {
    spec.kind = IndexKind::kShiftedGeometric;
  } else if (kind == "uniform") {
    spec.kind = IndexKind::kUniform;
  } else {
    throw ConfigError("unknown index kind '" + kind + "'");
  }
  if (colon != std::string_view::npos) {
    const std::string param(text.substr(colon + 1));
    std::size_t used = 0;
    try {
      spec.parameter = std::stod(param, &used);
    } catch (...) {
      throw ConfigError("malformed index parameter '" + param + "'");
    }
    if (used != param.size()) throw ConfigError("malformed index parameter '" + param + "'");
    spec.model_for(1);  // validates the parameter
  }
  return spec;
}

}  // namespace rotarclt
