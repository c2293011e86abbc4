#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cmath>
#include <optional>

#include "afc/errors.hpp"
#include "afc/models.hpp"

// Adaptive velocity observer with proportional-integral estimates: each
// estimate is an integrated state plus an algebraic function of the measured
// position. Only x1 is measured; vartheta is assumed known.

namespace afc {

struct ObserverGains {
  double k1 = 1.0;          ///< tuning gain, > 0
  double vartheta = 100.0;  ///< assumed-known tanh sharpness, > 0

  bool valid() const {
    return std::isfinite(k1) && std::isfinite(vartheta) && k1 > 0.0 &&
           vartheta > 0.0;
  }
};

using ObserverState = Eigen::Vector3d;       ///< [x2I, theta1I, theta2I]
using HydroObserverState = Eigen::Vector4d;  ///< [x2I, theta1I, theta2I, x3hat]

/// Algebraic estimates reconstructed from the integral states and x1.
struct ObserverOutput {
  double x2hat;
  double theta1hat;
  double theta2hat;
  double gamma1_lower;  ///< = k1; lower bound on the decay rate k1 + theta1
};

/// Observation/estimation errors against ground truth. Diagnostics only:
/// the observer itself never sees these. x3tilde is present for the
/// hydro-mechanical variant.
struct ErrorVector {
  double x2tilde = 0.0;
  double theta1tilde = 0.0;
  double theta2tilde = 0.0;
  std::optional<double> x3tilde{};
};

/// log(cosh(y)) without overflowing: cosh overflows near |y| = 710 while the
/// value itself is just |y| - log 2 there.
inline double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

inline ObserverOutput observer_output(const Eigen::Ref<const ObserverState>& os,
                                      double x1, const ObserverGains& g) {
  assert(g.valid());
  const double x2hat = os[0] + g.k1 * x1;
  return {x2hat,
          os[1] - 0.5 * (g.vartheta / g.k1) * x2hat * x2hat,
          os[2] - log_cosh(g.vartheta * x2hat) / g.k1,
          g.k1};
}

/// Integral-state dynamics for the friction-loaded motor plant. The x2I rate
/// is evaluated first and substituted into both parameter rates; there is no
/// implicit loop.
inline ObserverState observer_rhs(const ObserverState& os, double x1, double u,
                                  const ObserverGains& g) {
  const ObserverOutput out = observer_output(os, x1, g);
  const double th = std::tanh(g.vartheta * out.x2hat);
  const double dx2I = -(out.theta1hat + g.k1) * out.x2hat - out.theta2hat * th + u;
  const double drive = (g.vartheta / g.k1) * (dx2I + g.k1 * out.x2hat);
  return {dx2I, out.x2hat * drive, th * drive};
}

/// Hydro-mechanical variant: the velocity channel is driven by the estimated
/// load pressure instead of the input, and x3hat integrates a copy of the
/// pressure equation. Parameter rates are unchanged.
inline HydroObserverState hydro_observer_rhs(const HydroObserverState& os,
                                             double x1, double u,
                                             const ObserverGains& g,
                                             const HydroParams& p) {
  const ObserverOutput out = observer_output(os.head<3>(), x1, g);
  const double x3hat = os[3];
  const double th = std::tanh(g.vartheta * out.x2hat);
  const double dx2I =
      p.a1 * x3hat - (out.theta1hat + g.k1) * out.x2hat - out.theta2hat * th;
  const double drive = (g.vartheta / g.k1) * (dx2I + g.k1 * out.x2hat);
  return {dx2I, out.x2hat * drive, th * drive,
          -p.a2 * out.x2hat - p.a3 * x3hat + u};
}

/// H = (vartheta * x2tilde^2 + theta1tilde^2 + theta2tilde^2) / 2.
/// Nonincreasing along matched plant/observer trajectories.
inline double lyapunov_H(const ErrorVector& e, double vartheta) {
  return 0.5 * (vartheta * e.x2tilde * e.x2tilde +
                e.theta1tilde * e.theta1tilde + e.theta2tilde * e.theta2tilde);
}

/// U = H + alpha1_lyap * x3tilde^2 / 2 for the hydro-mechanical variant.
inline double lyapunov_U(const ErrorVector& e, double vartheta,
                         double alpha1_lyap) {
  if (!e.x3tilde) {
    throw ConfigError("lyapunov_U requires x3tilde (hydro-mechanical errors)");
  }
  return lyapunov_H(e, vartheta) + 0.5 * alpha1_lyap * *e.x3tilde * *e.x3tilde;
}

/// Decay coefficient on x2tilde^2 in the hydro-variant Lyapunov bound.
inline double alpha2_decay(double k1, double theta1, double theta2,
                           double vartheta, const HydroParams& p,
                           double alpha1_lyap) {
  const double gamma1 = k1 + theta1;
  return vartheta * gamma1 + theta2 * vartheta * vartheta -
         0.5 * theta2 * theta2 * vartheta * vartheta -
         0.5 * alpha1_lyap * alpha1_lyap * p.a2 * p.a2;
}

/// Gain certificate for the hydro-mechanical observer: the weight on
/// x3tilde^2 in U, the certified decay coefficients, and the smallest
/// admissible k1.
struct HydroGainCertificate {
  double alpha1_lyap;
  double alpha2_lyap;  ///< worst-case decay margin at k1 = k1_min
  double alpha3_lyap;  ///< = alpha1_lyap * a1 - 1, > 0
  double k1_min;
};

/// Smallest k1 making alpha2_decay positive for every theta1 > 0 and every
/// theta2 in (0, theta2_upper]. Conservative: theta1 is taken as 0 (unknown,
/// only helps) and theta2 at its worst case, which sits at theta2_upper when
/// theta2_upper > 2 and at the theta2 -> 0 limit otherwise. A relative margin
/// of 1e-6 keeps the inequality strict.
inline double k1_min(double theta2_upper, double vartheta,
                     const HydroParams& p, double alpha1_lyap) {
  if (!(theta2_upper > 0.0) || !(vartheta > 0.0)) {
    throw ConfigError("k1_min requires theta2_upper > 0 and vartheta > 0");
  }
  if (!(alpha1_lyap * p.a1 > 1.0)) {
    throw ConfigError("gain certificate infeasible: alpha1_lyap must exceed 1/a1");
  }
  const double vv = vartheta * vartheta;
  const double worst =
      std::max(0.0, 0.5 * theta2_upper * theta2_upper * vv - theta2_upper * vv);
  const double base =
      (worst + 0.5 * alpha1_lyap * alpha1_lyap * p.a2 * p.a2) / vartheta;
  return base * (1.0 + 1e-6);
}

inline HydroGainCertificate hydro_gain_certificate(double theta2_upper,
                                                   double vartheta,
                                                   const HydroParams& p,
                                                   double alpha1_lyap) {
  const double kmin = k1_min(theta2_upper, vartheta, p, alpha1_lyap);
  const double worst_theta2 = theta2_upper > 2.0 ? theta2_upper : 0.0;
  return {alpha1_lyap,
          alpha2_decay(kmin, 0.0, worst_theta2, vartheta, p, alpha1_lyap),
          alpha1_lyap * p.a1 - 1.0, kmin};
}

}  // namespace afc
