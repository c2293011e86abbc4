#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "afc/models.hpp"

using namespace afc;

TEST_CASE("mech_rhs hand values") {
  const FrictionParams p{0.4, 1.0, 100.0};

  const MechState at_rest = mech_rhs({0.0, 0.0}, p, 0.0);
  CHECK(at_rest[0] == 0.0);
  CHECK(at_rest[1] == 0.0);

  // tanh(100) and tanh(-50) are +-1 to machine precision.
  const MechState coasting = mech_rhs({0.0, 1.0}, p, 0.0);
  CHECK(coasting[0] == doctest::Approx(1.0));
  CHECK(coasting[1] == doctest::Approx(-1.4).epsilon(1e-12));

  const MechState reversing = mech_rhs({5.0, -0.5}, p, 2.0);
  CHECK(reversing[0] == doctest::Approx(-0.5));
  CHECK(reversing[1] == doctest::Approx(3.2).epsilon(1e-12));
}

TEST_CASE("mech friction is odd in velocity") {
  const FrictionParams p{0.7, 2.5, 50.0};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> vel(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double x2 = vel(rng);
    const double fwd = mech_rhs({0.3, x2}, p, 0.0)[1];
    const double bwd = mech_rhs({0.3, -x2}, p, 0.0)[1];
    CHECK(fwd == doctest::Approx(-bwd).epsilon(1e-15));
  }
}

TEST_CASE("mech_rhs with theta2 = 0 is linear in (x2, u)") {
  // theta2 > 0 is required; take it vanishingly small instead of zero and
  // check superposition of the viscous-only part exactly.
  const FrictionParams p{1.3, 1e-300, 10.0};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double x2a = d(rng), x2b = d(rng), ua = d(rng), ub = d(rng);
    const double a = 2.0, b = -0.5;
    const double lhs = mech_rhs({0.0, a * x2a + b * x2b}, p, a * ua + b * ub)[1];
    const double rhs =
        a * mech_rhs({0.0, x2a}, p, ua)[1] + b * mech_rhs({0.0, x2b}, p, ub)[1];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("hydro_rhs hand values") {
  SUBCASE("origin is an equilibrium") {
    const HydroParams p{};
    const HydroState d = hydro_rhs(HydroState::Zero(), p, 0.0);
    CHECK(d.norm() == 0.0);
  }
  SUBCASE("pressure drives velocity through a1") {
    HydroParams p;
    p.a1 = 2.0;
    p.a3 = 3.0;
    const HydroState d = hydro_rhs({0.0, 0.0, 1.0}, p, 0.0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(2.0));
    CHECK(d[2] == doctest::Approx(-3.0));
  }
  SUBCASE("friction stays on the velocity channel") {
    const HydroParams p{1.0, 1.0, 1.0, {0.4, 1.0, 100.0}};
    const HydroState d = hydro_rhs({0.0, 1.0, 0.0}, p, 1.0);
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == doctest::Approx(-1.4).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(0.0));
  }
}

TEST_CASE("lugre_rhs hand values with the bench parameter set") {
  const LuGreParams p{};  // sigma0 = 1e5, sigma1 = sqrt(1e5), sigma2 = 0.4,
                          // FC = 1, FS = 1.5, vS = 1e-3
  SUBCASE("rest equilibrium") {
    const LuGreState d = lugre_rhs(LuGreState::Zero(), p, 0.0);
    CHECK(d.norm() == 0.0);
  }
  SUBCASE("deflected bristle at zero velocity") {
    // At x2 = 0 the zdot term vanishes and the bristle spring dominates.
    const LuGreState d = lugre_rhs({0.0, 0.0, 0.001}, p, 0.0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(-100.0).epsilon(1e-12));
    CHECK(d[2] == 0.0);
  }
}

TEST_CASE("lugre g stays within [FC, FS]") {
  const LuGreParams p{};
  CHECK(lugre_g(0.0, p) == doctest::Approx(p.FS));
  CHECK(lugre_g(1.0, p) == doctest::Approx(p.FC));
  CHECK(lugre_g(-1.0, p) == doctest::Approx(p.FC));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> vel(-0.5, 0.5);
  for (int i = 0; i < 500; ++i) {
    const double g = lugre_g(vel(rng), p);
    CHECK(g >= p.FC);
    CHECK(g <= p.FS);
  }
}

TEST_CASE("parameter validation") {
  CHECK(FrictionParams{}.valid());
  CHECK_FALSE(FrictionParams{-0.1, 1.0, 100.0}.valid());
  CHECK_FALSE(FrictionParams{0.4, 0.0, 100.0}.valid());
  LuGreParams bad{};
  bad.FS = 0.5;  // below FC
  CHECK_FALSE(bad.valid());
  HydroParams h{};
  h.a2 = -1.0;
  CHECK_FALSE(h.valid());
}
