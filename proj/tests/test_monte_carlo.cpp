#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "rotarclt/monte_carlo.hpp"

using namespace rotarclt;

namespace {

std::vector<RandomIndexModel> models_at(std::int64_t n) {
  return {RandomIndexModel::for_outer(IndexKind::kDeterministic, n),
          RandomIndexModel::for_outer(IndexKind::kShiftedPoisson, n),
          RandomIndexModel::for_outer(IndexKind::kShiftedGeometric, n),
          RandomIndexModel::for_outer(IndexKind::kUniform, n)};
}

// sup_x |F_m(x) - Phi(x)| by brute force: check both one-sided limits at
// every sample point of an unsorted sample.
double brute_force_ks(const std::vector<double>& xs) {
  const auto m = static_cast<double>(xs.size());
  double d = 0.0;
  for (double x : xs) {
    double below = 0.0, at = 0.0;
    for (double y : xs) {
      below += y < x ? 1.0 : 0.0;
      at += y <= x ? 1.0 : 0.0;
    }
    d = std::max({d, std::abs(below / m - normal::cdf(x)), std::abs(at / m - normal::cdf(x))});
  }
  return d;
}

}  // namespace

TEST(Kolmogorov, DkwBandFormula) {
  // sqrt(ln 2000 / 2e5)
  EXPECT_NEAR(dkw_band(100000), 0.00616478, 1e-8);
  EXPECT_NEAR(dkw_band(100, 0.95), std::sqrt(std::log(40.0) / 200.0), 1e-15);
}

TEST(Kolmogorov, PValueMatchesTabulatedQuantiles) {
  // Large-sample critical values of sqrt(m) D: 1.36 at 5%, 1.63 at 1%, 1.95 at 0.1%.
  const std::int64_t m = 100'000'000;
  const double root = std::sqrt(static_cast<double>(m));
  EXPECT_NEAR(ks_p_value(1.358 / root, m), 0.05, 1e-3);
  EXPECT_NEAR(ks_p_value(1.628 / root, m), 0.01, 3e-4);
  EXPECT_NEAR(ks_p_value(1.949 / root, m), 0.001, 5e-5);
  EXPECT_EQ(ks_p_value(0.0, m), 1.0);
}

TEST(Kolmogorov, ZerosGiveOneHalf) {
  EmpiricalSample s;
  s.values.assign(1000, 0.0);
  s.trials = 1000;
  EXPECT_EQ(kolmogorov_distance(s).d_hat, 0.5);
}

TEST(Kolmogorov, EmptySampleRejected) {
  EXPECT_THROW(kolmogorov_distance(EmpiricalSample{}), DomainError);
}

TEST(Kolmogorov, MatchesBruteForceAndIgnoresOrder) {
  const auto raw = draw_normalized_sums(SummandFamily::rademacher(), RandomIndexModel::deterministic(3), 500, 9);
  std::vector<double> xs = raw.values;
  const double brute = brute_force_ks(xs);
  std::mt19937 gen(5);
  std::shuffle(xs.begin(), xs.end(), gen);
  EXPECT_EQ(brute_force_ks(xs), brute);
  std::sort(xs.begin(), xs.end());
  EXPECT_NEAR(ks_statistic(xs), brute, 1e-15);
}

TEST(Simulate, SingleRademacherTrial) {
  const auto s = simulate(SummandFamily::rademacher(), RandomIndexModel::deterministic(1), 1, 0);
  ASSERT_EQ(s.values.size(), 1u);
  EXPECT_TRUE(s.values[0] == 1.0 || s.values[0] == -1.0);
}

TEST(Simulate, SampleInvariants) {
  const auto s = simulate(SummandFamily::uniform(), RandomIndexModel::shifted_poisson(6.0), 5000, 2);
  EXPECT_EQ(s.values.size(), 5000u);
  EXPECT_TRUE(std::is_sorted(s.values.begin(), s.values.end()));
  std::int64_t total = 0;
  for (const auto& [k, c] : s.index_histogram) {
    EXPECT_GE(k, 1);
    total += c;
  }
  EXPECT_EQ(total, 5000);
  EXPECT_THROW(simulate(SummandFamily::uniform(), RandomIndexModel::deterministic(1), 0, 0), ConfigError);
}

TEST(Simulate, BitIdenticalForSameSeed) {
  for (const auto& family : builtin_families()) {
    const auto a = simulate(family, RandomIndexModel::shifted_geometric(0.1), 2000, 17);
    const auto b = simulate(family, RandomIndexModel::shifted_geometric(0.1), 2000, 17);
    EXPECT_EQ(a.values, b.values) << family.spec();
    EXPECT_EQ(a.index_histogram, b.index_histogram);
    const auto c = simulate(family, RandomIndexModel::shifted_geometric(0.1), 2000, 18);
    EXPECT_NE(a.values, c.values);
  }
}

TEST(Simulate, ThreadCountInvariant) {
  for (const auto& family : {SummandFamily::two_point(), SummandFamily::centered_exponential()}) {
    const auto one = draw_normalized_sums(family, RandomIndexModel::uniform(40), 3000, 5, {.threads = 1, .summand_seed = std::nullopt});
    const auto many = draw_normalized_sums(family, RandomIndexModel::uniform(40), 3000, 5, {.threads = 7, .summand_seed = std::nullopt});
    EXPECT_EQ(one.values, many.values);
    EXPECT_EQ(one.indices, many.indices);
  }
}

TEST(Simulate, AllNormalIsExactlyStandardNormal) {
  for (const auto& family : {SummandFamily::normal(), SummandFamily::geometric_normal()}) {
    for (const auto& m : models_at(30)) {
      const auto k = kolmogorov_distance(simulate(family, m, 100000, 1));
      EXPECT_GT(k.p_value, 1e-3) << family.spec() << " " << m.spec();
      EXPECT_LE(k.d_hat, k.dkw_band) << family.spec() << " " << m.spec();
    }
  }
}

TEST(Simulate, NormalizationMoments) {
  for (const auto& family : builtin_families()) {
    for (const auto& m : models_at(20)) {
      const auto c = normalization_check(simulate(family, m, 20000, 3));
      EXPECT_TRUE(c.mean_ok) << family.spec() << " " << m.spec() << " mean=" << c.mean;
      EXPECT_TRUE(c.variance_ok) << family.spec() << " " << m.spec() << " var=" << c.variance;
    }
  }
}

TEST(Simulate, NormalExactnessAcrossSeeds) {
  // 100 seeds; the 0.999 band may be exceeded at most 0.1% of the time.
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto k = kolmogorov_distance(simulate(SummandFamily::normal(), RandomIndexModel::shifted_poisson(4.0),
                                                10000, seed));
    if (k.d_hat <= k.dkw_band) ++within;
  }
  EXPECT_GE(within / 100.0, 0.999);
}

TEST(CfIdentity, DeterministicIsExact) {
  const std::vector<double> ts{0.0, 0.5, 1.0, 2.0, 4.0, 10.0};
  for (std::int64_t n : {1, 5, 100, 2000}) {
    const auto c = cf_identity_check(SummandFamily::geometric_normal(), RandomIndexModel::deterministic(n), ts);
    EXPECT_EQ(c.max_deviation, 0.0) << n;
  }
}

TEST(CfIdentity, RandomIndicesWithinTruncation) {
  const std::vector<double> ts{0.0, 0.5, 1.0, 2.0, 4.0};
  const std::vector<RandomIndexModel> models{RandomIndexModel::deterministic(5), RandomIndexModel::shifted_poisson(5.0),
                                             RandomIndexModel::shifted_geometric(0.2), RandomIndexModel::uniform(20)};
  for (const auto& family : {SummandFamily::normal(), SummandFamily::geometric_normal(), SummandFamily::normal(3.0)}) {
    for (const auto& m : models) {
      const auto c = cf_identity_check(family, m, ts);
      EXPECT_LE(c.max_deviation, 1e-12) << m.spec();
      EXPECT_LE(c.max_deviation, c.truncation_tail_mass + 1e-15) << m.spec();
      EXPECT_EQ(c.points.front().target, 1.0);
      EXPECT_NEAR(c.points.front().mixture, 1.0, 1e-12);
    }
  }
}

TEST(CfIdentity, SurvivesVarianceOverflow) {
  const std::vector<double> ts{1.0};
  const auto c =
      cf_identity_check(SummandFamily::geometric_normal(), RandomIndexModel::shifted_geometric(0.001), ts);
  EXPECT_LE(c.max_deviation, 1e-12);
}

TEST(CltSweep, DeterministicReducesToClassicalEstimate) {
  const std::vector<std::int64_t> grid{12};
  const auto sweep = clt_sweep(SummandFamily::uniform(), parse_index("det"), grid, 4000, 8);
  const auto direct = kolmogorov_distance(simulate(SummandFamily::uniform(), RandomIndexModel::deterministic(12), 4000, 8));
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0].estimate.d_hat, direct.d_hat);
  EXPECT_THROW(clt_sweep(SummandFamily::uniform(), parse_index("det"), std::vector<std::int64_t>{}, 10, 0),
               ConfigError);
}

TEST(CltSweep, AllNormalBelowBand) {
  const std::vector<std::int64_t> grid{10, 100, 1000};
  for (const char* index : {"det", "poisson", "geometric", "uniform"}) {
    for (const auto& p : clt_sweep(SummandFamily::normal(), parse_index(index), grid, 100000, 0)) {
      EXPECT_LE(p.estimate.d_hat, p.estimate.dkw_band) << index << " n=" << p.n;
      EXPECT_TRUE(p.moments.ok()) << index << " n=" << p.n;
    }
  }
}

TEST(CltSweep, RademacherGeometricDistanceShrinks) {
  const std::vector<std::int64_t> grid{10, 100, 1000};
  const auto sweep = clt_sweep(SummandFamily::rademacher(), parse_index("geometric"), grid, 100000, 0);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_LT(sweep[i].estimate.d_hat + sweep[i].estimate.dkw_band,
              sweep[i - 1].estimate.d_hat - sweep[i - 1].estimate.dkw_band)
        << "n=" << sweep[i].n;
  }
  for (const auto& p : sweep) EXPECT_TRUE(p.moments.ok()) << p.n;
}
