#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "afc/errors.hpp"
#include "afc/models.hpp"
#include "afc/observer.hpp"

using namespace afc;

TEST_CASE("log_cosh matches the naive formula where that is finite") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-30.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    const double y = d(rng);
    CHECK(log_cosh(y) == doctest::Approx(std::log(std::cosh(y))).epsilon(1e-14));
  }
  CHECK(log_cosh(0.0) == 0.0);
}

TEST_CASE("log_cosh large-argument asymptote, no overflow") {
  // log cosh y -> |y| - log 2; the naive form overflows past |y| ~ 710.
  for (const double y : {1e3, 1e6, -4e7}) {
    const double v = log_cosh(y);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::abs(y) - M_LN2).epsilon(1e-15));
  }
}

TEST_CASE("observer_output hand values") {
  SUBCASE("zero state") {
    const ObserverOutput out = observer_output(ObserverState::Zero(), 0.0, {1.0, 100.0});
    CHECK(out.x2hat == 0.0);
    CHECK(out.theta1hat == 0.0);
    CHECK(out.theta2hat == 0.0);
    CHECK(out.gamma1_lower == 1.0);
  }
  SUBCASE("proportional corrections") {
    const ObserverOutput out =
        observer_output(ObserverState{1.0, 2.0, 0.0}, 0.5, {1.0, 100.0});
    CHECK(out.x2hat == doctest::Approx(1.5));
    CHECK(out.theta1hat == doctest::Approx(-110.5));  // 2 - 50 * 1.5^2
    // logcosh(150) = 150 - log 2
    CHECK(out.theta2hat == doctest::Approx(-(150.0 - M_LN2)).epsilon(1e-12));
  }
  SUBCASE("saturated logcosh stays finite") {
    const ObserverOutput out =
        observer_output(ObserverState{1e4, 0.0, 0.0}, 0.0, {1.0, 100.0});
    CHECK(std::isfinite(out.theta2hat));
    CHECK(out.theta2hat == doctest::Approx(-(1e6 - M_LN2)));
  }
}

TEST_CASE("observer_rhs hand chain") {
  SUBCASE("origin is stationary") {
    const ObserverState d = observer_rhs(ObserverState::Zero(), 0.0, 0.0, {1.0, 100.0});
    CHECK(d.norm() == 0.0);
  }
  SUBCASE("chained evaluation at k1 = 2, vartheta = 100") {
    const ObserverGains g{2.0, 100.0};
    const ObserverState os = ObserverState::Zero();
    const double x1 = 1.0;
    // x2hat = 2, theta1hat = -(100/4)*4 = -100, theta2hat = -logcosh(200)/2
    const double theta2hat = -(200.0 - M_LN2) / 2.0;
    const double dx2I_expected = -(-100.0 + 2.0) * 2.0 - theta2hat * std::tanh(200.0);
    const ObserverState d = observer_rhs(os, x1, 0.0, g);
    CHECK(d[0] == doctest::Approx(dx2I_expected).epsilon(1e-12));
    const double drive = (100.0 / 2.0) * (d[0] + 2.0 * 2.0);
    CHECK(d[1] == doctest::Approx(2.0 * drive).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(std::tanh(200.0) * drive).epsilon(1e-12));
  }
}

TEST_CASE("matched estimates are stationary against the true plant") {
  // Build integral states so the outputs equal the truth; the reconstructed
  // error rates must then vanish.
  const FrictionParams p{0.4, 1.0, 100.0};
  const ObserverGains g{3.0, 100.0};
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x1 = d(rng), x2 = d(rng), u = 2.0 * d(rng);
    ObserverState os;
    os[0] = x2 - g.k1 * x1;
    os[1] = p.theta1 + 0.5 * (g.vartheta / g.k1) * x2 * x2;
    os[2] = p.theta2 + log_cosh(g.vartheta * x2) / g.k1;

    const ObserverOutput out = observer_output(os, x1, g);
    CHECK(out.x2hat == doctest::Approx(x2).epsilon(1e-12));
    CHECK(out.theta1hat == doctest::Approx(p.theta1).epsilon(1e-9));
    CHECK(out.theta2hat == doctest::Approx(p.theta2).epsilon(1e-9));

    // d/dt x2tilde = dx2I + k1 * dx1 - dx2, with dx1 = x2 for the true plant.
    const ObserverState dos = observer_rhs(os, x1, u, g);
    const double dx2_true = mech_rhs({x1, x2}, p, u)[1];
    const double dx2tilde = dos[0] + g.k1 * x2 - dx2_true;
    CHECK(dx2tilde == doctest::Approx(0.0).epsilon(1e-9));

    // d/dt theta_i_tilde = vartheta * phi_i(x2hat) * x2tilde = 0 here.
    const double dtheta1hat =
        dos[1] - (g.vartheta / g.k1) * out.x2hat * (dos[0] + g.k1 * x2);
    const double dtheta2hat =
        dos[2] -
        (g.vartheta / g.k1) * std::tanh(g.vartheta * out.x2hat) * (dos[0] + g.k1 * x2);
    CHECK(dtheta1hat == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(dtheta2hat == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("hydro_observer_rhs hand values") {
  const HydroParams p{2.0, 1.0, 3.0, {}};
  SUBCASE("all-zero state is stationary") {
    const HydroObserverState d =
        hydro_observer_rhs(HydroObserverState::Zero(), 0.0, 0.0, {1.0, 100.0}, p);
    CHECK(d.norm() == 0.0);
  }
  SUBCASE("pressure estimate drives the velocity channel") {
    const HydroObserverState d = hydro_observer_rhs(
        HydroObserverState{0.0, 0.0, 0.0, 1.0}, 0.0, 0.0, {1.0, 100.0}, p);
    CHECK(d[0] == doctest::Approx(2.0));   // a1 * x3hat
    CHECK(d[3] == doctest::Approx(-3.0));  // -a3 * x3hat
    CHECK(d[1] == 0.0);
    CHECK(d[2] == 0.0);
  }
  SUBCASE("a1 = 0 decouples x3hat from the velocity update") {
    HydroParams q = p;
    q.a1 = 1e-307;  // effectively zero while staying a valid parameter set
    const ObserverGains g{1.0, 100.0};
    const HydroObserverState a =
        hydro_observer_rhs({0.5, 0.1, 0.2, -4.0}, 0.3, 0.7, g, q);
    const HydroObserverState b =
        hydro_observer_rhs({0.5, 0.1, 0.2, 9.0}, 0.3, 0.7, g, q);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
    CHECK(a[2] == doctest::Approx(b[2]).epsilon(1e-12));
    CHECK(a[3] != b[3]);
  }
}

TEST_CASE("lyapunov_H") {
  CHECK(lyapunov_H({0.0, 0.0, 0.0}, 100.0) == 0.0);
  CHECK(lyapunov_H({0.1, 1.0, -2.0}, 100.0) == doctest::Approx(3.0));
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    ErrorVector e{d(rng), d(rng), d(rng)};
    const double h = lyapunov_H(e, 50.0);
    CHECK(h >= 0.0);
    ErrorVector e2{2.0 * e.x2tilde, 2.0 * e.theta1tilde, 2.0 * e.theta2tilde};
    CHECK(lyapunov_H(e2, 50.0) == doctest::Approx(4.0 * h).epsilon(1e-12));
  }
}

TEST_CASE("lyapunov_U") {
  ErrorVector e{0.0, 0.0, 0.0, 2.0};
  CHECK(lyapunov_U(e, 100.0, 3.0) == doctest::Approx(6.0));
  ErrorVector zero{0.0, 0.0, 0.0, 0.0};
  CHECK(lyapunov_U(zero, 100.0, 3.0) == 0.0);

  std::mt19937 rng(29);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    ErrorVector r{d(rng), d(rng), d(rng), d(rng)};
    CHECK(lyapunov_U(r, 100.0, 2.0) >= lyapunov_H(r, 100.0));
  }

  ErrorVector no_x3{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(lyapunov_U(no_x3, 100.0, 2.0), ConfigError);
}

namespace {

// Independent oracle for the k1 certificate: the decay coefficient written
// out from scratch, scanned over a (theta1, theta2) grid.
double alpha2_oracle(double k1, double theta1, double theta2, double vartheta,
                     double a2, double alpha1) {
  return vartheta * (k1 + theta1) + theta2 * vartheta * vartheta -
         0.5 * theta2 * theta2 * vartheta * vartheta -
         0.5 * alpha1 * alpha1 * a2 * a2;
}

bool grid_certifies(double k1, double theta2_upper, double vartheta, double a2,
                    double alpha1) {
  for (int i = 1; i <= 400; ++i) {
    const double theta2 = theta2_upper * static_cast<double>(i) / 400.0;
    for (const double theta1 : {0.0, 0.5, 2.0, 5.0}) {
      if (!(alpha2_oracle(k1, theta1, theta2, vartheta, a2, alpha1) > 0.0)) {
        return false;
      }
    }
  }
  // Probe the theta2 -> 0 edge explicitly.
  return alpha2_oracle(k1, 0.0, 1e-12 * theta2_upper, vartheta, a2, alpha1) > 0.0;
}

}  // namespace

TEST_CASE("k1_min hand values, with the underhang check") {
  HydroParams p{};
  p.a2 = 1.0;
  CHECK(k1_min(1.0, 100.0, p, 2.0) == doctest::Approx(0.02 * (1.0 + 1e-6)));
  CHECK(grid_certifies(0.02 * (1.0 + 1e-6), 1.0, 100.0, 1.0, 2.0));
  CHECK_FALSE(grid_certifies(0.02 * (1.0 - 1e-3), 1.0, 100.0, 1.0, 2.0));

  p.a2 = 1e-300;  // a2 ~ 0
  CHECK(k1_min(4.0, 1.0, p, 2.0) == doctest::Approx(4.0 * (1.0 + 1e-6)));
  CHECK(grid_certifies(4.0 * (1.0 + 1e-6), 4.0, 1.0, 0.0, 2.0));
  CHECK_FALSE(grid_certifies(4.0 * (1.0 - 1e-3), 4.0, 1.0, 0.0, 2.0));

  // theta2_upper <= 2 with a2 = 0: every positive k1 certifies.
  CHECK(k1_min(2.0, 1.0, p, 2.0) == doctest::Approx(0.0));
  CHECK(grid_certifies(1e-9, 2.0, 1.0, 0.0, 2.0));

  CHECK_THROWS_AS(k1_min(1.0, 100.0, HydroParams{}, 0.5), ConfigError);
}

TEST_CASE("k1_min certificate against the grid oracle, randomized") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    HydroParams p{};
    p.a1 = 0.1 + 5.0 * d01(rng);
    p.a2 = 5.0 * d01(rng) + 1e-6;
    p.a3 = 0.1 + 5.0 * d01(rng);
    const double vartheta = 1.0 + 199.0 * d01(rng);
    const double alpha1 = 1.0 / p.a1 + 0.01 + 5.0 * d01(rng);
    const double theta2_upper = 0.05 + 5.0 * d01(rng);

    const double kmin = k1_min(theta2_upper, vartheta, p, alpha1);
    CHECK(grid_certifies(kmin, theta2_upper, vartheta, p.a2, alpha1));
  }
}

TEST_CASE("hydro_gain_certificate invariants") {
  HydroParams p{};
  p.a1 = 0.8;
  p.a2 = 2.0;
  const auto cert = hydro_gain_certificate(1.5, 50.0, p, 2.0);
  CHECK(cert.alpha1_lyap == 2.0);
  CHECK(cert.alpha3_lyap == doctest::Approx(2.0 * 0.8 - 1.0));
  CHECK(cert.alpha3_lyap > 0.0);
  CHECK(cert.alpha2_lyap >= 0.0);
  CHECK(cert.k1_min > 0.0);
}
