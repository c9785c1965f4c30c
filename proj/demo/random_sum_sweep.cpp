// Kolmogorov distance of S_nu / B_nu to the standard normal for Rademacher
// summands under each built-in random index, next to the random Rotar value.

#include <cstdio>
#include <vector>

#include "rotarclt/conditions.hpp"
#include "rotarclt/monte_carlo.hpp"

int main() {
  using namespace rotarclt;
  const auto family = SummandFamily::rademacher();
  const std::vector<std::int64_t> grid{10, 100, 1000};
  constexpr std::int64_t kTrials = 50000;

  for (const char* kind : {"det", "poisson", "geometric", "uniform"}) {
    const auto index = parse_index(kind);
    const auto sweep = clt_sweep(family, index, grid, kTrials, 7);
    std::printf("index %s\n", kind);
    for (const auto& p : sweep) {
      const double rr = random_rotar(family, index.model_for(p.n), 0.1).value;
      std::printf("  n=%-5lld d_hat=%.5f band=%.5f random_rotar(0.1)=%.5f\n", static_cast<long long>(p.n),
                  p.estimate.d_hat, p.estimate.dkw_band, rr);
    }
  }
}
