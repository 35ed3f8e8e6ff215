#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfq/kernel.hpp"

using namespace mfq;

namespace {

Kernel const_kernel(double a, double b) {
  return Kernel::parse("const", {{"a", a}, {"b", b}});
}

Kernel mf_kernel() {
  return Kernel::parse("mfqueue",
                       {{"a0", 0.5}, {"a1", 1.0}, {"b0", 0.7}, {"b1", 0.3}, {"kmax", 5}});
}

}  // namespace

TEST_CASE("constant kernel integrates to itself") {
  Kernel k = const_kernel(1.0, 2.0);
  EmpiricalMeasure mu({{State{0, 0.0, 0.0}, 0.5}, {State{7, 1.0, 1.0}, 0.5}});
  State X{3, 0.2, 0.1};
  CHECK(k.mean_field(JumpType::Arrival, 0.0, X, mu) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.mean_field(JumpType::Service, 0.0, X, mu) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("point mass integration equals the pointwise kernel") {
  Kernel k = mf_kernel();
  State X{2, 0.1, 0.1}, Y{3, 0.0, 0.0};
  EmpiricalMeasure mu = EmpiricalMeasure::point_mass(Y);
  for (JumpType side : {JumpType::Arrival, JumpType::Service})
    CHECK(k.mean_field(side, 0.0, X, mu) ==
          doctest::Approx(k.pointwise(side, 0.0, X, Y)).epsilon(1e-14));
}

TEST_CASE("two-atom average") {
  // lambda+ values 1 and 3 averaged with equal weight -> 2
  Kernel k = Kernel::parse("mfqueue", {{"a0", 1.0}, {"a1", 2.0}, {"b0", 0.0},
                                       {"b1", 0.0}, {"kmax", 1}});
  State X{0, 0.0, 0.0};
  State Y0{0, 0.0, 0.0}, Y1{1, 0.0, 0.0};
  CHECK(k.pointwise(JumpType::Arrival, 0.0, X, Y0) == doctest::Approx(1.0));
  CHECK(k.pointwise(JumpType::Arrival, 0.0, X, Y1) == doctest::Approx(3.0));
  EmpiricalMeasure mu({{Y0, 0.5}, {Y1, 0.5}});
  CHECK(k.mean_field(JumpType::Arrival, 0.0, X, mu) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("service intensity vanishes at an empty system") {
  for (const Kernel& k : {const_kernel(1.0, 2.0), mf_kernel()}) {
    State empty{0, 3.0, 0.0};
    EmpiricalMeasure mu = EmpiricalMeasure::point_mass(State{5, 0.0, 0.0});
    CHECK(k.mean_field(JumpType::Service, 1.0, empty, mu) == 0.0);
    CHECK(k.pointwise(JumpType::Service, 1.0, empty, State{5, 0.0, 0.0}) == 0.0);
    CHECK(k.total_rate(1.0, empty, mu) ==
          doctest::Approx(k.mean_field(JumpType::Arrival, 1.0, empty, mu)));
  }
}

TEST_CASE("total rate sums both sides away from empty") {
  Kernel k = const_kernel(1.0, 2.0);
  EmpiricalMeasure mu = EmpiricalMeasure::point_mass(State{0, 0.0, 0.0});
  CHECK(k.total_rate(0.0, State{2, 0.0, 0.0}, mu) == doctest::Approx(3.0));
  CHECK(k.total_rate(0.0, State{0, 0.0, 0.0}, mu) == doctest::Approx(1.0));
  Kernel zero = const_kernel(0.0, 0.0);
  CHECK(zero.total_rate(0.0, State{2, 0.0, 0.0}, mu) == 0.0);
}

TEST_CASE("bounds of the catalog") {
  Kernel k = const_kernel(1.0, 2.0);
  CHECK(k.bounds().lambda_bar == doctest::Approx(2.0));
  CHECK(k.bounds().lambda_underbar == doctest::Approx(1.0));
  CHECK(k.bounds().total_bar == doctest::Approx(3.0));
  CHECK(k.bounds().K == doctest::Approx(1.0));
  CHECK(k.bounds().uniqueness_mode());

  Kernel m = mf_kernel();
  CHECK(m.bounds().lambda_bar == doctest::Approx(1.5));
  CHECK(m.bounds().lambda_underbar == doctest::Approx(0.5));
  CHECK(m.bounds().total_bar == doctest::Approx(2.5));
  CHECK(m.bounds().K == doctest::Approx(2.0));

  Kernel z = const_kernel(1.0, 0.0);
  CHECK_FALSE(z.bounds().uniqueness_mode());
  CHECK(std::isinf(z.bounds().K));
}

TEST_CASE("rates respect declared bounds across inputs") {
  for (const Kernel& k :
       {const_kernel(1.0, 2.0), mf_kernel(),
        Kernel::parse("age", {{"a0", 0.5}, {"b0", 0.3}, {"b1", 0.9}})}) {
    const auto& b = k.bounds();
    for (int kx : {0, 1, 4})
      for (double y : {0.0, 0.5, 10.0})
        for (int ky : {0, 2, 9}) {
          State X{kx, 0.1, kx > 0 ? y : 0.0}, Y{ky, 0.0, 0.0};
          for (JumpType side : {JumpType::Arrival, JumpType::Service}) {
            const double v = k.pointwise(side, 0.0, X, Y);
            CHECK(v >= 0.0);
            CHECK(v <= b.lambda_bar + 1e-12);
            if (!(side == JumpType::Service && kx == 0))
              CHECK(v >= b.lambda_underbar - 1e-12);
          }
        }
  }
}

TEST_CASE("age kernel service rate grows with elapsed service") {
  Kernel k = Kernel::parse("age", {{"a0", 0.5}, {"b0", 0.3}, {"b1", 0.9}});
  State Y{0, 0.0, 0.0};
  const double r0 = k.pointwise(JumpType::Service, 0.0, State{1, 0.0, 0.0}, Y);
  const double r1 = k.pointwise(JumpType::Service, 0.0, State{1, 0.0, 2.0}, Y);
  CHECK(r0 == doctest::Approx(0.3));
  CHECK(r1 == doctest::Approx(0.3 + 0.9 * (1.0 - std::exp(-2.0))).epsilon(1e-14));
  CHECK(r1 > r0);
}

TEST_CASE("mean_field_rate is linear in the measure") {
  Kernel k = mf_kernel();
  State X{2, 0.1, 0.3};
  EmpiricalMeasure mu1 = EmpiricalMeasure::point_mass(State{1, 0.0, 0.0});
  EmpiricalMeasure mu2({{State{4, 0.0, 0.0}, 0.5}, {State{0, 1.0, 0.0}, 0.5}});
  const double alpha = 0.3;
  std::vector<EmpiricalMeasure::Atom> blended;
  for (const auto& [s, w] : mu1.atoms()) blended.emplace_back(s, alpha * w);
  for (const auto& [s, w] : mu2.atoms()) blended.emplace_back(s, (1.0 - alpha) * w);
  EmpiricalMeasure mix(blended);
  for (JumpType side : {JumpType::Arrival, JumpType::Service})
    CHECK(k.mean_field(side, 0.0, X, mix) ==
          doctest::Approx(alpha * k.mean_field(side, 0.0, X, mu1) +
                          (1.0 - alpha) * k.mean_field(side, 0.0, X, mu2))
              .epsilon(1e-12));
}

TEST_CASE("Lipschitz-in-measure bound") {
  // |Lambda[mu1] - Lambda[mu2]| <= lambda_bar * tv_half on a separating partition
  Kernel k = mf_kernel();
  CellScheme fine{1e-6};  // separates all the atoms below
  State X{1, 0.0, 0.5};
  EmpiricalMeasure mu1({{State{0, 0.0, 0.0}, 0.4}, {State{3, 1.0, 0.5}, 0.6}});
  EmpiricalMeasure mu2({{State{0, 0.0, 0.0}, 0.9}, {State{8, 2.0, 0.5}, 0.1}});
  const double tvh = tv_half(mu1, mu2, fine);
  for (JumpType side : {JumpType::Arrival, JumpType::Service})
    CHECK(std::abs(k.mean_field(side, 0.0, X, mu1) - k.mean_field(side, 0.0, X, mu2)) <=
          k.bounds().lambda_bar * tvh + 1e-12);
}

TEST_CASE("stats round trip matches direct mean-field evaluation") {
  Kernel k = mf_kernel();
  EmpiricalMeasure mu({{State{2, 0.0, 0.0}, 0.5}, {State{9, 0.0, 0.0}, 0.5}});
  auto stats = k.stats_of(mu);
  REQUIRE(stats.size() == 1);
  State X{3, 0.1, 0.1};
  for (JumpType side : {JumpType::Arrival, JumpType::Service})
    CHECK(k.mean_field_stats(side, 0.0, X, stats) ==
          doctest::Approx(k.mean_field(side, 0.0, X, mu)).epsilon(1e-14));
}

TEST_CASE("kernel sums and parameter prefixes") {
  Kernel k = Kernel::parse("const+age", {{"1.a", 0.5},
                                         {"1.b", 0.25},
                                         {"2.a0", 0.25},
                                         {"2.b0", 0.5},
                                         {"2.b1", 1.0}});
  CHECK(k.id() == "const+age");
  State X{1, 0.0, 0.0}, Y{0, 0.0, 0.0};
  CHECK(k.pointwise(JumpType::Arrival, 0.0, X, Y) == doctest::Approx(0.75));
  CHECK(k.pointwise(JumpType::Service, 0.0, X, Y) == doctest::Approx(0.75));
  CHECK(k.bounds().total_bar == doctest::Approx(0.75 + 1.75));
  // round trip through id/params
  Kernel rt = Kernel::parse(k.id(), k.params());
  CHECK(rt.params() == k.params());
}

TEST_CASE("parse rejects bad specifications") {
  CHECK_THROWS_AS(Kernel::parse("nope", {}), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::parse("const", {{"a", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::parse("const", {{"a", -1.0}, {"b", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::parse("mfqueue", {{"a0", 1.0}, {"a1", 1.0}, {"b0", 1.0},
                                            {"b1", 1.0}, {"kmax", 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Kernel::parse("", {}), std::invalid_argument);
}
