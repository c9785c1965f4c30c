#pragma once

// Summand families X_j = sigma_j * Y_j, where Y_j has a fixed standardized
// shape (mean 0, variance 1) and sigma_j^2 = sigma^2 * ratio^(j-1).
//
// ratio == 1 gives an i.i.d. family. ratio > 1 gives the exploding-variance
// families used to probe the non-classical regime. All scale bookkeeping is
// also available in log form so that indices in the tens of thousands are
// usable with ratio 2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rotarclt/errors.hpp"
#include "rotarclt/gauss_kronrod.hpp"
#include "rotarclt/normal.hpp"
#include "rotarclt/rng.hpp"

namespace rotarclt {

// ---------------------------------------------------------------------------
// Standardized shapes
// ---------------------------------------------------------------------------

/// P(Y = -1) = P(Y = +1) = 1/2.
struct RademacherShape {};

/// Uniform on [-sqrt(3), sqrt(3)].
struct UniformShape {
  static constexpr double kHalfWidth = 1.7320508075688772935;
};

struct NormalShape {};

/// E - 1 with E ~ Exp(1).
struct CenteredExponentialShape {};

using Shape = std::variant<RademacherShape, UniformShape, NormalShape, CenteredExponentialShape>;

namespace shape {

/// P(Y <= u).
inline double cdf(const Shape& s, double u) {
  struct Visitor {
    double u;
    double operator()(RademacherShape) const { return u < -1.0 ? 0.0 : (u < 1.0 ? 0.5 : 1.0); }
    double operator()(UniformShape) const {
      constexpr double a = UniformShape::kHalfWidth;
      if (u <= -a) return 0.0;
      if (u >= a) return 1.0;
      return (u + a) / (2.0 * a);
    }
    double operator()(NormalShape) const { return normal::cdf(u); }
    double operator()(CenteredExponentialShape) const {
      return u < -1.0 ? 0.0 : -std::expm1(-(u + 1.0));
    }
  };
  return std::visit(Visitor{u}, s);
}

/// P(|Y| > c), strict inequality.
inline double exceedance(const Shape& s, double c) {
  if (c < 0.0) return 1.0;
  struct Visitor {
    double c;
    double operator()(RademacherShape) const { return c < 1.0 ? 1.0 : 0.0; }
    double operator()(UniformShape) const {
      constexpr double a = UniformShape::kHalfWidth;
      return c < a ? (a - c) / a : 0.0;
    }
    double operator()(NormalShape) const { return normal::two_sided_tail(c); }
    double operator()(CenteredExponentialShape) const {
      const double upper = std::exp(-(1.0 + c));
      const double lower = c < 1.0 ? -std::expm1(-(1.0 - c)) : 0.0;
      return upper + lower;
    }
  };
  return std::visit(Visitor{c}, s);
}

/// E|Y|^p in closed form (series for the exponential shape).
inline double abs_moment(const Shape& s, double p) {
  struct Visitor {
    double p;
    double operator()(RademacherShape) const { return 1.0; }
    double operator()(UniformShape) const {
      return std::pow(UniformShape::kHalfWidth, p) / (p + 1.0);
    }
    double operator()(NormalShape) const { return normal::abs_moment(p); }
    double operator()(CenteredExponentialShape) const {
      // E|E-1|^p = e^{-1} [ int_0^1 u^p e^u du + Gamma(p+1) ],
      // int_0^1 u^p e^u du = sum_m 1 / (m! (p+m+1)).
      double series = 0.0, inv_factorial = 1.0;
      for (int m = 0; m < 200; ++m) {
        const double term = inv_factorial / (p + m + 1.0);
        series += term;
        if (term < 1e-18 * series) break;
        inv_factorial /= (m + 1.0);
      }
      return std::exp(-1.0) * (series + std::tgamma(p + 1.0));
    }
  };
  return std::visit(Visitor{p}, s);
}

inline double sample(const Shape& s, RandomStream& stream) {
  struct Visitor {
    RandomStream& stream;
    double operator()(RademacherShape) const { return stream.bit() ? 1.0 : -1.0; }
    double operator()(UniformShape) const {
      return UniformShape::kHalfWidth * (2.0 * stream.uniform() - 1.0);
    }
    double operator()(NormalShape) const { return stream.standard_normal(); }
    double operator()(CenteredExponentialShape) const {
      return -std::log(stream.uniform_positive()) - 1.0;
    }
  };
  return std::visit(Visitor{stream}, s);
}

inline bool is_normal(const Shape& s) { return std::holds_alternative<NormalShape>(s); }
inline bool is_discrete(const Shape& s) { return std::holds_alternative<RademacherShape>(s); }
inline bool is_symmetric(const Shape& s) {
  return !std::holds_alternative<CenteredExponentialShape>(s);
}

}  // namespace shape

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

enum class FamilyKind { kRademacher, kUniform, kNormal, kGeometricNormal, kTwoPoint, kExponential };

inline std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kRademacher: return "rademacher";
    case FamilyKind::kUniform: return "uniform";
    case FamilyKind::kNormal: return "normal";
    case FamilyKind::kGeometricNormal: return "geometric-normal";
    case FamilyKind::kTwoPoint: return "two-point";
    case FamilyKind::kExponential: return "exponential";
  }
  return "?";
}

/// B_n bookkeeping for the first n summands.
struct PartialVariance {
  std::int64_t n = 0;
  double b_squared = 0.0;      ///< may be +inf for huge exploding families
  double b = 0.0;
  double log_b_squared = 0.0;  ///< always finite
};

class SummandFamily {
 public:
  static SummandFamily rademacher(double sigma = 1.0) {
    return {FamilyKind::kRademacher, RademacherShape{}, sigma, 1.0};
  }
  static SummandFamily uniform(double sigma = 1.0) {
    return {FamilyKind::kUniform, UniformShape{}, sigma, 1.0};
  }
  static SummandFamily normal(double sigma = 1.0) {
    return {FamilyKind::kNormal, NormalShape{}, sigma, 1.0};
  }
  /// sigma_j^2 = sigma^2 ratio^(j-1), normal summands.
  static SummandFamily geometric_normal(double ratio = 2.0, double sigma = 1.0) {
    return {FamilyKind::kGeometricNormal, NormalShape{}, sigma, ratio};
  }
  /// +-sigma_j with probability 1/2 each, sigma_j^2 = sigma^2 ratio^(j-1).
  static SummandFamily two_point(double ratio = 2.0, double sigma = 1.0) {
    return {FamilyKind::kTwoPoint, RademacherShape{}, sigma, ratio};
  }
  /// sigma * (Exp(1) - 1).
  static SummandFamily centered_exponential(double sigma = 1.0) {
    return {FamilyKind::kExponential, CenteredExponentialShape{}, sigma, 1.0};
  }

  FamilyKind kind() const { return kind_; }
  const Shape& shape() const { return shape_; }
  double base_sigma() const { return sigma_; }
  double ratio() const { return ratio_; }
  bool identically_distributed() const { return ratio_ == 1.0; }
  bool all_normal() const { return shape::is_normal(shape_); }

  double mean(std::int64_t) const { return 0.0; }

  double log_variance(std::int64_t j) const {
    check_index(j);
    return 2.0 * log_sigma_ + static_cast<double>(j - 1) * log_ratio_;
  }
  double variance(std::int64_t j) const {
    check_index(j);
    if (identically_distributed()) return sigma_ * sigma_;
    return sigma_ * sigma_ * std::pow(ratio_, static_cast<double>(j - 1));
  }
  double sigma(std::int64_t j) const {
    if (identically_distributed()) return sigma_;
    const double v = variance(j);
    return std::isfinite(v) ? std::sqrt(v) : std::exp(0.5 * log_variance(j));
  }

  double log_b_squared(std::int64_t n) const {
    check_index(n);
    const double nn = static_cast<double>(n);
    if (identically_distributed()) return 2.0 * log_sigma_ + std::log(nn);
    // log((r^n - 1)/(r - 1)) without forming r^n.
    const double nl = nn * log_ratio_;
    return 2.0 * log_sigma_ + nl + std::log(-std::expm1(-nl)) - std::log(ratio_ - 1.0);
  }

  PartialVariance partial_variance(std::int64_t n) const {
    check_index(n);
    PartialVariance pv;
    pv.n = n;
    pv.log_b_squared = log_b_squared(n);
    if (identically_distributed()) {
      pv.b_squared = sigma_ * sigma_ * static_cast<double>(n);
    } else {
      pv.b_squared = sigma_ * sigma_ * ((std::pow(ratio_, static_cast<double>(n)) - 1.0) / (ratio_ - 1.0));
    }
    pv.b = std::isfinite(pv.b_squared) ? std::sqrt(pv.b_squared) : std::exp(0.5 * pv.log_b_squared);
    return pv;
  }

  /// sigma_j^2 / B_n^2, evaluated without overflow.
  double variance_share(std::int64_t j, std::int64_t n) const {
    if (identically_distributed()) return 1.0 / static_cast<double>(n);
    const double vj = variance(j);
    const double bn = partial_variance(n).b_squared;
    if (std::isfinite(vj) && std::isfinite(bn) && bn < 1e300) return vj / bn;
    return std::exp(log_variance(j) - log_b_squared(n));
  }

  /// B_m^2 / B_n^2 for m <= n: the variance share of the first m summands.
  double prefix_share(std::int64_t m, std::int64_t n) const {
    if (m <= 0) return 0.0;
    if (identically_distributed()) return static_cast<double>(m) / static_cast<double>(n);
    return std::exp(log_b_squared(m) - log_b_squared(n));
  }

  /// P(X_j <= x).
  double cdf(std::int64_t j, double x) const { return shape::cdf(shape_, x / sigma(j)); }

  /// E|X_j|^order. Every built-in shape has a closed form, so the error
  /// estimate is zero.
  IntegralResult abs_moment(std::int64_t j, double order) const {
    if (!(order >= 1.0) || !std::isfinite(order)) {
      throw DomainError("absolute moment order must be a finite real >= 1");
    }
    const double scale = identically_distributed() ? std::pow(sigma_, order)
                                                   : std::exp(order * 0.5 * log_variance(j));
    return {scale * shape::abs_moment(shape_, order), 0.0, 0};
  }

  double sample(std::int64_t j, RandomStream& stream) const {
    return sigma(j) * shape::sample(shape_, stream);
  }

  /// Draws X_1..X_k in order from `stream` and returns S_k / B_k.
  double normalized_sum(std::int64_t k, RandomStream& stream) const {
    check_index(k);
    if (identically_distributed()) {
      const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
      if (shape::is_discrete(shape_)) {
        return static_cast<double>(stream.rademacher_sum(static_cast<std::uint64_t>(k))) * inv_sqrt_k;
      }
      double sum = 0.0;
      for (std::int64_t j = 1; j <= k; ++j) sum += shape::sample(shape_, stream);
      return sum * inv_sqrt_k;
    }
    const double log_b2 = log_b_squared(k);
    double sum = 0.0;
    for (std::int64_t j = 1; j <= k; ++j) {
      const double weight = std::exp(0.5 * (log_variance(j) - log_b2));
      sum += weight * shape::sample(shape_, stream);
    }
    return sum;
  }

  /// Canonical grammar form, e.g. "two-point,ratio=2,sigma=1".
  std::string spec() const {
    std::ostringstream out;
    out.precision(17);
    out << to_string(kind_);
    if (kind_ == FamilyKind::kGeometricNormal || kind_ == FamilyKind::kTwoPoint) out << ",ratio=" << ratio_;
    out << ",sigma=" << sigma_;
    return out.str();
  }

  bool operator==(const SummandFamily& other) const {
    return kind_ == other.kind_ && sigma_ == other.sigma_ && ratio_ == other.ratio_;
  }

 private:
  SummandFamily(FamilyKind kind, Shape shape, double sigma, double ratio)
      : kind_(kind), shape_(shape), sigma_(sigma), ratio_(ratio) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("family sigma must be finite and > 0");
    if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw ConfigError("family ratio must be finite and >= 1");
    log_sigma_ = std::log(sigma);
    log_ratio_ = std::log(ratio);
  }

  static void check_index(std::int64_t j) {
    if (j < 1) throw DomainError("summand index must be >= 1");
  }

  FamilyKind kind_;
  Shape shape_;
  double sigma_;
  double ratio_;
  double log_sigma_ = 0.0;
  double log_ratio_ = 0.0;
};

/// X*_j ~ N(0, sigma_j^2) matched to a family.
class NormalComparator {
 public:
  explicit NormalComparator(SummandFamily family) : family_(std::move(family)) {}

  double sigma(std::int64_t j) const { return family_.sigma(j); }
  double cdf(std::int64_t j, double x) const { return normal::cdf(x / sigma(j)); }
  double abs_first_moment(std::int64_t j) const { return sigma(j) * normal::kSqrt2OverPi; }

 private:
  SummandFamily family_;
};

// ---------------------------------------------------------------------------
// Grammar: [family=]<kind>[,<key>=<value>...]
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos == std::string_view::npos ? text.size() - start : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline double parse_number(std::string_view text, std::string_view what) {
  const std::string s(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (...) {
    throw ConfigError("malformed number for " + std::string(what) + ": '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("malformed number for " + std::string(what) + ": '" + s + "'");
  return value;
}

}  // namespace detail

inline SummandFamily parse_family(std::string_view text) {
  if (text.starts_with("family=")) text.remove_prefix(7);
  const auto parts = detail::split(text, ',');
  const std::string& kind = parts.front();
  double sigma = 1.0;
  double ratio = 2.0;
  bool ratio_given = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw ConfigError("family parameter without '=': '" + parts[i] + "'");
    const std::string key = parts[i].substr(0, eq);
    const double value = detail::parse_number(std::string_view(parts[i]).substr(eq + 1), key);
    if (key == "sigma") {
      sigma = value;
    } else if (key == "ratio") {
      ratio = value;
      ratio_given = true;
    } else {
      throw ConfigError("unknown family parameter '" + key + "'");
    }
  }
  const bool heterogeneous = kind == "geometric-normal" || kind == "two-point";
  if (ratio_given && !heterogeneous) throw ConfigError("family '" + kind + "' takes no ratio parameter");
  if (kind == "rademacher") return SummandFamily::rademacher(sigma);
  if (kind == "uniform") return SummandFamily::uniform(sigma);
  if (kind == "normal") return SummandFamily::normal(sigma);
  if (kind == "geometric-normal") return SummandFamily::geometric_normal(ratio, sigma);
  if (kind == "two-point") return SummandFamily::two_point(ratio, sigma);
  if (kind == "exponential") return SummandFamily::centered_exponential(sigma);
  throw ConfigError("unknown family kind '" + kind + "'");
}

/// The six built-in families with default parameters.
inline std::vector<SummandFamily> builtin_families() {
  return {SummandFamily::rademacher(),        SummandFamily::uniform(),
          SummandFamily::normal(),            SummandFamily::geometric_normal(),
          SummandFamily::two_point(),         SummandFamily::centered_exponential()};
}

}  // namespace rotarclt
