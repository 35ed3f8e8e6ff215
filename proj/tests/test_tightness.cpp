#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfq/tightness.hpp"

using namespace mfq;

namespace {

Kernel const_kernel(double a, double b) {
  return Kernel::parse("const", {{"a", a}, {"b", b}});
}

std::vector<ParticleSystem> frozen_family(const Kernel& k, double T, std::size_t n,
                                          std::uint64_t seed) {
  std::vector<ParticleSystem> out;
  for (double h : {T / 4.0, T / 8.0}) {
    SimConfig cfg;
    cfg.particles = n;
    cfg.horizon = T;
    cfg.mode = FrozenDelayMode{h};
    cfg.grid_step = T / 16.0;
    cfg.seed = seed++;
    out.push_back(simulate(cfg, k));
  }
  return out;
}

}  // namespace

TEST_CASE("poisson helpers") {
  CHECK(poisson_upper_tail(1.0, 0) == 1.0);
  CHECK(poisson_upper_tail(1.0, 1) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(poisson_upper_tail(1.0, 2) ==
        doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(poisson_quantile(1.0, 0.3) == 0.0);
  CHECK(poisson_quantile(1.0, 0.5) == 1.0);
  CHECK(poisson_quantile(1.0, 0.73) == 1.0);
  CHECK(poisson_quantile(1.0, 0.74) == 2.0);
  CHECK(poisson_quantile(10.0, 0.995) >= poisson_quantile(10.0, 0.9));
}

TEST_CASE("sko1 for a drift-only system") {
  Kernel k = const_kernel(0.0, 2.0);
  const double T = 4.0;
  SimConfig cfg;
  cfg.particles = 200;
  cfg.horizon = T;
  cfg.grid_step = 0.25;
  std::vector<ParticleSystem> systems;
  systems.push_back(simulate(cfg, k));
  TightnessTable t = sko1_diagnostic(systems, T, {0.0, 2.0, 4.0, 5.0});
  REQUIRE(t.value.size() == 1);
  CHECK(t.scheme_h[0] == 0.0);
  CHECK(t.value[0][0] == 1.0);  // |X_t| = t > 0 somewhere on the grid
  CHECK(t.value[0][2] == 0.0);  // never exceeds T
  CHECK(t.value[0][3] == 0.0);
  // monotone in c
  for (std::size_t c = 1; c < t.value[0].size(); ++c)
    CHECK(t.value[0][c] <= t.value[0][c - 1]);
}

TEST_CASE("sko1 family stays below the derived threshold") {
  Kernel k = const_kernel(1.0, 2.0);
  const double T = 4.0;
  auto systems = frozen_family(k, T, 2000, 77);
  const double c_star = derived_sko1_threshold(systems[0], k.bounds(), T);
  CHECK(c_star == doctest::Approx(2.0 * T + poisson_quantile(2.0 * T, 0.995)));
  TightnessTable t = sko1_diagnostic(systems, T, {0.0, 2.0, 4.0, c_star});
  for (std::size_t row = 0; row < t.value.size(); ++row) {
    CHECK(t.value[row].back() <= 0.01);
    for (std::size_t c = 1; c < t.value[row].size(); ++c)
      CHECK(t.value[row][c] <= t.value[row][c - 1]);
  }
}

TEST_CASE("sko2 for a drift-only system") {
  Kernel k = const_kernel(0.0, 2.0);
  const double T = 4.0;
  SimConfig cfg;
  cfg.particles = 100;
  cfg.horizon = T;
  cfg.grid_step = 0.25;
  std::vector<ParticleSystem> systems = {simulate(cfg, k)};
  const double eps = 1.0;
  // drift alone displaces by at most 2w < eps for w < eps/2
  TightnessTable t = sko2_diagnostic(systems, T, {0.0, 0.25, 0.45}, eps);
  for (double v : t.value[0]) CHECK(v == 0.0);
}

TEST_CASE("sko2 obeys the jump bound and is monotone in the window") {
  Kernel k = const_kernel(1.0, 2.0);
  const double T = 4.0;
  auto systems = frozen_family(k, T, 2000, 99);
  const double eps = 1.0;
  std::vector<double> windows = {0.0, 0.25, 0.5};
  TightnessTable t = sko2_diagnostic(systems, T, windows, eps);
  for (std::size_t row = 0; row < t.value.size(); ++row) {
    CHECK(t.value[row][0] == 0.0);
    for (std::size_t w = 1; w < windows.size(); ++w) {
      CHECK(t.value[row][w] >= t.value[row][w - 1]);
      if (windows[w] < eps / 2.0)
        CHECK(t.value[row][w] <=
              k.bounds().total_bar * windows[w] + 3.0 * t.se[row][w] + 1e-9);
    }
  }
}

TEST_CASE("tightness input validation") {
  CHECK_THROWS_AS(sko1_diagnostic({}, 1.0, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(sko2_diagnostic({}, 1.0, {0.1}, 0.5), std::invalid_argument);
  Kernel k = const_kernel(1.0, 2.0);
  SimConfig cfg;
  cfg.particles = 10;
  cfg.horizon = 1.0;
  cfg.grid_step = 0.25;
  std::vector<ParticleSystem> systems = {simulate(cfg, k)};
  CHECK_THROWS_AS(sko2_diagnostic(systems, 1.0, {0.1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sko1_diagnostic(systems, 2.0, {1.0}), std::invalid_argument);
}
