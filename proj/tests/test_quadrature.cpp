#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rotarclt/dist_model.hpp"
#include "rotarclt/gauss_kronrod.hpp"
#include "rotarclt/tail_integrals.hpp"

using namespace rotarclt;

namespace {

// High-precision reference values (40-digit quadrature).
constexpr double kRotarRademacher2 = 0.0397315371818384823;
constexpr double kRotarRademacherHalf = 0.451505631611646788;
constexpr double kRotarExponentialHalf = 0.319402932287592866;
constexpr double kRotarExponential2 = 0.149361205103591829;
constexpr double kRotarUniformHalf = 0.164117733183864466;
constexpr double kNormalAbsThirdTail1 = 1.45182434711486010;   // E[|Z|^3; |Z| > 1]
constexpr double kExpAbsPowTail = 1.43471288774915603;         // E[|E-1|^2.5; |E-1| > 0.5]
constexpr double kExpSecondTailHalf = 0.967009695841605165;    // E[(E-1)^2; |E-1| > 0.5]

std::vector<Shape> all_shapes() {
  return {RademacherShape{}, UniformShape{}, NormalShape{}, CenteredExponentialShape{}};
}

}  // namespace

TEST(GaussKronrod, WeightsSumToTwo) {
  double k = gk15::kKronrodWeights[7], g = gk15::kGaussWeights[3];
  for (int i = 0; i < 7; ++i) k += 2.0 * gk15::kKronrodWeights[i];
  for (int i = 0; i < 3; ++i) g += 2.0 * gk15::kGaussWeights[i];
  EXPECT_NEAR(k, 2.0, 1e-15);
  EXPECT_NEAR(g, 2.0, 1e-15);
}

TEST(GaussKronrod, SinglePanelExactForPolynomials) {
  // K15 integrates degree <= 22 exactly, G7 degree <= 13.
  for (int degree = 0; degree <= 22; ++degree) {
    auto f = [degree](double x) { return std::pow(x, degree); };
    const auto panel = gk15::evaluate(f, -1.0, 1.0);
    const double exact = degree % 2 == 0 ? 2.0 / (degree + 1) : 0.0;
    EXPECT_NEAR(panel.value, exact, 1e-14) << "degree " << degree;
    if (degree <= 13) {
      EXPECT_LT(panel.error, 1e-14) << "degree " << degree;
    }
  }
}

TEST(GaussKronrod, AdaptiveSmoothAndKinked) {
  const auto s = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  EXPECT_NEAR(s.value, 2.0, 1e-12);
  const auto k = integrate([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0);
  EXPECT_NEAR(k.value, 0.5 * (1.3 * 1.3 + 0.7 * 0.7), 1e-10);
  EXPECT_LE(k.error_estimate, 1e-10);
}

TEST(GaussKronrod, BudgetExhaustionCarriesPartialValue) {
  QuadratureOptions tight{1e-14, 3};
  try {
    integrate([](double x) { return std::sqrt(std::abs(x)); }, -1.0, 1.0, tight);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NEAR(e.partial_value(), 4.0 / 3.0, 1e-2);
    EXPECT_GT(e.partial_error(), 0.0);
  }
}

TEST(TailSecondMoment, Examples) {
  const auto rad = SummandFamily::rademacher();
  EXPECT_EQ(tail_second_moment(rad, 1, 1.5).value, 0.0);
  EXPECT_EQ(tail_second_moment(rad, 1, 0.5).value, 1.0);
  EXPECT_NEAR(tail_second_moment(SummandFamily::normal(), 1, 1e-300).value, 1.0, 1e-15);
  EXPECT_NEAR(tail_second_moment(SummandFamily::centered_exponential(), 1, 0.5).value, kExpSecondTailHalf, 1e-14);
}

TEST(TailSecondMoment, ZeroThresholdGivesVariance) {
  for (const auto& family : builtin_families()) {
    for (std::int64_t j : {1, 5, 20}) {
      EXPECT_NEAR(tail_second_moment(family, j, 0.0).value / family.variance(j), 1.0, 1e-8) << family.spec();
    }
  }
}

TEST(TailAbsMoment, Examples) {
  for (const auto& family : builtin_families()) {
    EXPECT_EQ(tail_abs_moment(family, 1, INFINITY, 3.0).value, 0.0) << family.spec();
  }
  EXPECT_EQ(tail_abs_moment(SummandFamily::rademacher(), 1, 0.0, 3.0).value, 1.0);
  EXPECT_NEAR(tail_abs_moment(SummandFamily::normal(), 1, 0.0, 3.0).value, 2.0 * normal::kSqrt2OverPi, 1e-14);
  EXPECT_NEAR(tail_abs_moment(SummandFamily::normal(), 1, 1.0, 3.0).value, kNormalAbsThirdTail1, 1e-10);
  EXPECT_NEAR(tail_abs_moment(SummandFamily::centered_exponential(), 1, 0.5, 2.5).value, kExpAbsPowTail, 1e-10);
}

TEST(TailAbsMoment, RejectsOrderBelowOne) {
  EXPECT_THROW(tail_abs_moment(SummandFamily::normal(), 1, 0.5, 0.5), DomainError);
}

TEST(TailAbsMoment, ScalesWithSigma) {
  const auto family = SummandFamily::geometric_normal(2.0);
  // sigma_5 = 4: int_{|x|>4} |x|^3 dPhi(x/4) = 64 E[|Z|^3; |Z| > 1].
  EXPECT_NEAR(tail_abs_moment(family, 5, 4.0, 3.0).value, 64.0 * kNormalAbsThirdTail1, 1e-8);
}

TEST(RotarTail, NormalIsIdenticallyZero) {
  for (double t : {0.0, 0.1, 1.0, 5.0}) {
    const auto r = rotar_tail_integral(SummandFamily::normal(), 1, t);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.error_estimate, 0.0);
  }
}

TEST(RotarTail, ReferenceValues) {
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::rademacher(), 1, 2.0).value, kRotarRademacher2, 1e-15);
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::rademacher(), 1, 0.5).value, kRotarRademacherHalf, 1e-15);
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::centered_exponential(), 1, 0.5).value, kRotarExponentialHalf, 1e-10);
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::centered_exponential(), 1, 2.0).value, kRotarExponential2, 1e-10);
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::uniform(), 1, 0.5).value, kRotarUniformHalf, 1e-10);
  // Beyond sqrt(3) the uniform CDF is 1, exactly as for the two-point law beyond 1.
  EXPECT_NEAR(rotar_tail_integral(SummandFamily::uniform(), 1, 2.0).value, kRotarRademacher2, 1e-15);
}

TEST(RotarTail, BoundedByHalfTheTailSecondMoments) {
  // int_{|x|>t} |x||F - Phi| <= (int_{|x|>t} x^2 dF + int_{|x|>t} x^2 dPhi) / 2.
  for (const auto& s : all_shapes()) {
    for (double c : {0.0, 0.3, 1.0, 2.0, 4.0}) {
      const double r = tails::rotar(s, c).value;
      const double bound = 0.5 * (tails::second_moment(s, c).value + normal::tail_second_moment(c));
      EXPECT_LE(r, bound + 1e-10) << c;
      EXPECT_GE(r, 0.0);
    }
  }
}

TEST(RotarTail, FarThreshold) {
  for (const auto& s : all_shapes()) {
    // Beyond 40 only the exponential right tail survives: int_40^inf u e^{-(u+1)} du.
    const double expected = std::holds_alternative<CenteredExponentialShape>(s) ? 41.0 * std::exp(-41.0) : 0.0;
    EXPECT_NEAR(tails::rotar(s, 40.0).value, expected, 1e-30);
  }
}

TEST(RotarTail, SymmetricShapesHaveEqualHalves) {
  // Direct one-sided quadrature, independent of the closed forms.
  for (const Shape& s : {Shape{RademacherShape{}}, Shape{UniformShape{}}}) {
    for (double c : {0.25, 0.9, 1.5}) {
      auto right = [&s](double u) { return u * std::abs(shape::cdf(s, u) - normal::cdf(u)); };
      auto left = [&s](double u) { return -u * std::abs(shape::cdf(s, u) - normal::cdf(u)); };
      std::vector<double> rb{c}, lb{-40.0};
      for (double p : {1.0, 1.5011307831938014, UniformShape::kHalfWidth}) {
        if (p > c) rb.push_back(p);
      }
      rb.push_back(40.0);
      for (auto it = rb.rbegin() + 1; it != rb.rend(); ++it) lb.push_back(-*it);
      QuadratureOptions o{1e-13, 10000};
      const double r = integrate_pieces(right, rb, o).value;
      const double l = integrate_pieces(left, lb, o).value;
      EXPECT_NEAR(r, l, 1e-10);
      EXPECT_NEAR(r + l, tails::rotar(s, c).value, 1e-10);
    }
  }
}

TEST(TailOperations, NonincreasingInThreshold) {
  for (const auto& family : builtin_families()) {
    double prev_second = INFINITY, prev_abs = INFINITY, prev_rotar = INFINITY;
    double prev_abs_err = 0.0, prev_rotar_err = 0.0;
    for (double t = 0.0; t <= 6.0; t += 0.125) {
      const auto second = tail_second_moment(family, 1, t);
      const auto abs = tail_abs_moment(family, 1, t, 2.5);
      const auto rot = rotar_tail_integral(family, 1, t);
      EXPECT_LE(second.value, prev_second) << family.spec() << " t=" << t;
      EXPECT_LE(abs.value, prev_abs + abs.error_estimate + prev_abs_err) << family.spec() << " t=" << t;
      EXPECT_LE(rot.value, prev_rotar + rot.error_estimate + prev_rotar_err) << family.spec() << " t=" << t;
      prev_second = second.value;
      prev_abs = abs.value;
      prev_rotar = rot.value;
      prev_abs_err = abs.error_estimate;
      prev_rotar_err = rot.error_estimate;
    }
  }
}

TEST(TailOperations, ErrorEstimatesAreHonest) {
  // Halving the tolerance moves the value by less than the coarser estimate.
  for (const auto& s : all_shapes()) {
    for (double c : {0.2, 0.8, 1.7}) {
      QuadratureOptions coarse{1e-6, 10000}, fine{5e-7, 10000};
      const auto r1 = tails::rotar(s, c, coarse), r2 = tails::rotar(s, c, fine);
      EXPECT_LE(std::abs(r1.value - r2.value), r1.error_estimate + 1e-15);
      const auto a1 = tails::abs_moment(s, c, 2.5, coarse), a2 = tails::abs_moment(s, c, 2.5, fine);
      EXPECT_LE(std::abs(a1.value - a2.value), a1.error_estimate + 1e-15);
    }
  }
}

TEST(TailOperations, NegativeThresholdRejected) {
  EXPECT_THROW(tail_second_moment(SummandFamily::normal(), 1, -1.0), DomainError);
  EXPECT_THROW(rotar_tail_integral(SummandFamily::normal(), 1, -1.0), DomainError);
}
