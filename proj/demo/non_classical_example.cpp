// Normal summands with variances 1, 2, 4, 8, ...: the last summand carries
// about half of the total variance, so the Feller and infinitesimality
// conditions fail, yet every normalized sum is exactly standard normal and
// the Rotar functional is identically zero.

#include <cstdio>

#include "rotarclt/conditions.hpp"
#include "rotarclt/monte_carlo.hpp"

int main() {
  using namespace rotarclt;
  const auto family = SummandFamily::geometric_normal(2.0);
  const double eps = 0.5;

  std::printf("%4s %10s %10s %10s %10s %10s\n", "n", "lindeberg", "feller", "infinites", "rotar", "d_hat");
  for (std::int64_t n : {1, 2, 5, 10, 20, 30}) {
    const auto sample = simulate(family, RandomIndexModel::deterministic(n), 100000, 0);
    const auto k = kolmogorov_distance(sample);
    std::printf("%4lld %10.6f %10.6f %10.6f %10.6f %10.6f\n", static_cast<long long>(n),
                lindeberg(family, n, eps).value, feller(family, n).value, infinitesimality(family, n, eps).value,
                rotar(family, n, eps).value, k.d_hat);
  }
  std::printf("DKW band at 1e5 trials: %.6f\n", dkw_band(100000));
}
