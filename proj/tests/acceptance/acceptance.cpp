// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rotarclt/cli.hpp"
#include "rotarclt/conditions.hpp"
#include "rotarclt/monte_carlo.hpp"
#include "rotarclt/rates.hpp"

using namespace rotarclt;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::vector<RandomIndexModel> outer_models(std::int64_t n) {
  return {RandomIndexModel::for_outer(IndexKind::kDeterministic, n),
          RandomIndexModel::for_outer(IndexKind::kShiftedPoisson, n),
          RandomIndexModel::for_outer(IndexKind::kShiftedGeometric, n),
          RandomIndexModel::for_outer(IndexKind::kUniform, n)};
}

// Every simulation run by the gate is recorded here for criterion 8.
std::vector<std::pair<std::string, MomentCheck>> g_moments;

EmpiricalSample recorded_simulate(const SummandFamily& family, const RandomIndexModel& model, std::int64_t trials,
                                  std::uint64_t seed) {
  auto s = simulate(family, model, trials, seed);
  g_moments.emplace_back(family.spec() + " " + model.spec(), normalization_check(s));
  return s;
}

Outcome cf_identity() {
  const auto start = Clock::now();
  const std::vector<double> ts{0.0, 0.5, 1.0, 2.0, 4.0};
  const std::vector<RandomIndexModel> models{RandomIndexModel::deterministic(5), RandomIndexModel::shifted_poisson(5.0),
                                             RandomIndexModel::shifted_geometric(0.2), RandomIndexModel::uniform(20)};
  double worst = 0.0;
  for (const auto& family : {SummandFamily::normal(), SummandFamily::geometric_normal()}) {
    for (const auto& m : models) worst = std::max(worst, cf_identity_check(family, m, ts).max_deviation);
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 1.0, fmt("max deviation %.3g", worst) + fmt(", %.3f s", elapsed)};
}

Outcome inequality_chain() {
  const auto start = Clock::now();
  int audits = 0, failures = 0;
  std::string first_failure;
  for (const auto& family : builtin_families()) {
    for (std::int64_t n : {1, 10, 100, 1000}) {
      for (const auto& m : outer_models(n)) {
        for (double eps : {0.05, 0.1, 0.5, 1.0}) {
          const auto a = implication_audit(family, m, n, eps, 1.0);
          ++audits;
          if (!a.passed()) {
            ++failures;
            if (first_failure.empty()) first_failure = "; first failure " + family.spec() + " " + m.spec();
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 300.0,
          std::to_string(audits - failures) + "/" + std::to_string(audits) + " audits pass" +
              fmt(", %.1f s", elapsed) + first_failure};
}

Outcome deterministic_reduction() {
  int mismatches = 0, compared = 0;
  for (const auto& family : builtin_families()) {
    for (std::int64_t n : {1, 10, 100}) {
      const auto det = RandomIndexModel::deterministic(n);
      if (det.truncation_tail_mass() != 0.0) ++mismatches;
      for (double eps : {0.05, 0.1, 0.5, 1.0}) {
        const auto rl = random_lindeberg(family, det, eps), l = lindeberg(family, n, eps);
        const auto rr = random_rotar(family, det, eps), r = rotar(family, n, eps);
        mismatches += rl.value != l.value || rl.error_bound != l.error_bound;
        mismatches += rr.value != r.value || rr.error_bound != r.error_bound;
        compared += 2;
      }
      mismatches += random_feller(family, det).value != feller(family, n).value;
      ++compared;
    }
  }
  return {mismatches == 0, std::to_string(compared - mismatches) + "/" + std::to_string(compared) + " exact"};
}

Outcome non_classical() {
  const auto family = SummandFamily::geometric_normal();
  const double r = rotar(family, 30, 0.5).value;
  const double f = feller(family, 30).value;
  const double inf = infinitesimality(family, 30, 0.5).value;
  const auto k = kolmogorov_distance(recorded_simulate(family, RandomIndexModel::deterministic(30), 100000, 0));
  const bool ok = r == 0.0 && f >= 0.499 && f <= 0.501 && inf > 0.5 && k.d_hat < k.dkw_band;
  std::ostringstream d;
  d << "rotar " << r << ", feller " << cli::detail::format_number(f) << ", infinitesimality "
    << fmt("%.4f", inf) << ", d_hat " << fmt("%.5f", k.d_hat) << " < band " << fmt("%.5f", k.dkw_band);
  return {ok, d.str()};
}

Outcome random_rotar_clt() {
  const auto start = Clock::now();
  const auto family = SummandFamily::rademacher();
  std::vector<double> rr, d_hat, band;
  for (std::int64_t n : {10, 100, 1000}) {
    const auto m = RandomIndexModel::for_outer(IndexKind::kShiftedGeometric, n);
    rr.push_back(random_rotar(family, m, 0.1).value);
    const auto k = kolmogorov_distance(recorded_simulate(family, m, 100000, 0));
    d_hat.push_back(k.d_hat);
    band.push_back(k.dkw_band);
  }
  bool ok = true;
  for (std::size_t i = 1; i < rr.size(); ++i) {
    ok = ok && rr[i] < rr[i - 1];
    ok = ok && d_hat[i] + band[i] < d_hat[i - 1] - band[i - 1];
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 600.0;
  std::ostringstream d;
  d << "random_rotar " << fmt("%.4f", rr[0]) << " > " << fmt("%.4f", rr[1]) << " > " << fmt("%.4f", rr[2])
    << "; d_hat " << fmt("%.4f", d_hat[0]) << " > " << fmt("%.4f", d_hat[1]) << " > " << fmt("%.4f", d_hat[2])
    << " (band " << fmt("%.4f", band[0]) << ")" << fmt(", %.1f s", elapsed);
  return {ok, d.str()};
}

Outcome large_o() {
  const std::vector<std::int64_t> grid{4, 16, 64, 256, 1024};
  const auto curve =
      large_o_audit(SummandFamily::rademacher(), parse_index("det"), test_functions::sine(), grid, 1000000, 0, 1.0);
  const bool ok = curve.within_bound && std::abs(curve.bound_order + 1.0) <= 0.02;
  std::ostringstream d;
  d << "bound order " << fmt("%.4f", curve.bound_order) << ", fitted constant "
    << fmt("%.3g", curve.fitted_constant) << (curve.fitted_constant == 0.0 ? " (all metrics at noise floor)" : "")
    << ", every metric within bound: " << (curve.within_bound ? "yes" : "no");
  return {ok, d.str()};
}

Outcome small_o() {
  const std::vector<std::int64_t> grid{10, 100, 1000};
  const std::vector<double> eps{0.1, 0.5};
  const auto f = test_functions::cos2();
  const auto rad = small_o_audit(SummandFamily::rademacher(), parse_index("geometric"), f, grid, eps, 4000000, 0);
  const auto nor = small_o_audit(SummandFamily::normal(), parse_index("geometric"), f, grid, eps, 4000000, 0);
  bool normal_zero = true;
  for (const auto& p : nor.points) normal_zero = normal_zero && p.metric <= kNoiseSigmas * p.mc_stderr;
  std::ostringstream d;
  d << "rademacher r(n) " << fmt("%.4f", rad.points[0].ratio) << " > " << fmt("%.4f", rad.points[1].ratio) << " > "
    << fmt("%.4f", rad.points[2].ratio) << "; normal r(n) within noise: " << (normal_zero ? "yes" : "no");
  return {rad.decreasing && normal_zero, d.str()};
}

Outcome normalization() {
  // Dedicated sweep over every family and index kind, plus the runs above.
  for (const auto& family : builtin_families()) {
    for (std::int64_t n : {10, 100, 1000}) {
      for (const auto& m : outer_models(n)) recorded_simulate(family, m, 20000, 1);
    }
  }
  int bad = 0;
  std::string first;
  for (const auto& [label, c] : g_moments) {
    if (!c.ok()) {
      ++bad;
      if (first.empty()) first = "; first failure " + label;
    }
  }
  const auto total = static_cast<int>(g_moments.size());
  return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " simulations" + first};
}

std::string run_to_string(const std::vector<std::string>& args, const std::string& threads) {
  ::setenv(kThreadsEnvVar, threads.c_str(), 1);
  auto cfg = cli::parse_args(args);
  const auto path = std::filesystem::temp_directory_path() / ("rotarclt_acceptance_" + std::to_string(::getpid()));
  cfg.out = path.string();
  std::ostringstream diag;
  const int status = cli::run(cfg, diag);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(path);
  return std::to_string(status) + "\n" + ss.str();
}

Outcome reproducibility() {
  const std::vector<std::vector<std::string>> runs{
      {"cf-check", "--family", "normal", "--index", "poisson:5"},
      {"audit", "--family", "exponential", "--index", "geometric", "--n-grid", "10,100", "--epsilon", "0.05,0.5",
       "--format", "csv"},
      {"simulate", "--family", "geometric-normal", "--index", "det", "--n", "30", "--trials", "100000"},
      {"simulate", "--family", "rademacher", "--index", "geometric", "--n-grid", "10,100,1000", "--trials", "100000"},
      {"rates", "--family", "rademacher", "--index", "det", "--n-grid", "4,16,64", "--trials", "200000"},
      {"rates", "--family", "rademacher", "--index", "geometric", "--n-grid", "10,100", "--trials", "200000",
       "--mode", "small-o", "--fn", "cos2", "--epsilon", "0.1,0.5"},
      {"conditions", "--family", "two-point", "--index", "uniform", "--n-grid", "10,100", "--epsilon", "0.1,1"}};
  const char* saved = std::getenv(kThreadsEnvVar);
  const std::string restore = saved ? saved : "";
  int identical = 0;
  for (const auto& args : runs) {
    const auto one = run_to_string(args, "1");
    const auto again = run_to_string(args, "1");
    const auto many = run_to_string(args, "3");
    const auto lots = run_to_string(args, "8");
    identical += one == again && one == many && one == lots && one.size() > 2;
  }
  if (saved) {
    ::setenv(kThreadsEnvVar, restore.c_str(), 1);
  } else {
    ::unsetenv(kThreadsEnvVar);
  }
  const auto total = static_cast<int>(runs.size());
  return {identical == total,
          std::to_string(identical) + "/" + std::to_string(total) + " runs byte-identical at 1, 1, 3, 8 threads"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cf identity for normal summands", cf_identity},
      {"implication inequality chain", inequality_chain},
      {"deterministic-index reduction", deterministic_reduction},
      {"non-classical configuration", non_classical},
      {"random Rotar CLT forward direction", random_rotar_clt},
      {"large-O rate audit", large_o},
      {"small-o rate audit", small_o},
      {"normalization identities", normalization},
      {"reproducibility across thread counts", reproducibility}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.passed ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
