#pragma once

#include <cassert>
#include <cmath>
#include <variant>

#include "afc/models.hpp"
#include "afc/observer.hpp"

// Certainty-equivalent tracking law on estimated velocity and friction
// parameters, plus the twice-differentiable reference generators it needs.

namespace afc {

struct ControllerGains {
  double alpha1 = 100.0;  ///< position-error gain (target s^2 + a2 s + a1)
  double alpha2 = 100.0;  ///< velocity-error gain

  bool valid() const {
    return std::isfinite(alpha1) && std::isfinite(alpha2) && alpha1 > 0.0 &&
           alpha2 > 0.0;
  }
};

/// Reference position and its first two derivatives at one time instant.
struct ReferenceSample {
  double r = 0.0;
  double dr = 0.0;
  double ddr = 0.0;
};

struct ConstantRef {
  double value = 0.0;

  ReferenceSample sample(double) const { return {value, 0.0, 0.0}; }
};

struct SinusoidRef {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
  double offset = 0.0;

  ReferenceSample sample(double t) const {
    const double a = omega * t + phase;
    return {offset + amplitude * std::sin(a), amplitude * omega * std::cos(a),
            -amplitude * omega * omega * std::sin(a)};
  }
};

/// r(t) = amplitude * cos(rate * t^2): a sweep whose instantaneous frequency
/// grows linearly, rich in excitation. Derivatives are the exact chain-rule
/// expressions.
struct ChirpRef {
  double amplitude = 1.0;
  double rate = 0.01;

  ReferenceSample sample(double t) const {
    const double a = rate * t * t;
    const double s = std::sin(a);
    const double c = std::cos(a);
    return {amplitude * c, -2.0 * amplitude * rate * t * s,
            -2.0 * amplitude * rate * s -
                4.0 * amplitude * rate * rate * t * t * c};
  }
};

/// Step followed by a delayed constant-slope ramp. Each breakpoint is blended
/// with a quintic over a configurable window so ddr exists everywhere (the
/// raw signal has no second derivative at the corners).
struct StepRampRef {
  double base = 0.0;
  double step_time = 1.0;
  double step_height = 0.5;
  double ramp_start = 50.0;
  double ramp_slope = 0.05;
  double blend = 0.1;  ///< blend window length, > 0

  ReferenceSample sample(double t) const {
    assert(blend > 0.0);
    ReferenceSample out{base, 0.0, 0.0};
    {  // step: height * smoothstep over [step_time, step_time + blend]
      const double x = (t - step_time) / blend;
      if (x >= 1.0) {
        out.r += step_height;
      } else if (x > 0.0) {
        out.r += step_height * quintic(x);
        out.dr += step_height * quintic_d1(x) / blend;
        out.ddr += step_height * quintic_d2(x) / (blend * blend);
      }
    }
    {  // ramp: velocity eases from 0 to slope over [ramp_start, ramp_start + blend]
      const double x = (t - ramp_start) / blend;
      if (x >= 1.0) {
        out.r += ramp_slope * (t - ramp_start - 0.5 * blend);
        out.dr += ramp_slope;
      } else if (x > 0.0) {
        out.r += ramp_slope * blend * quintic_i(x);
        out.dr += ramp_slope * quintic(x);
        out.ddr += ramp_slope * quintic_d1(x) / blend;
      }
    }
    return out;
  }

 private:
  // 10x^3 - 15x^4 + 6x^5 on [0,1]: C^2 with zero slope and curvature at both ends.
  static double quintic(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
  static double quintic_d1(double x) {
    const double y = x * (1.0 - x);
    return 30.0 * y * y;
  }
  static double quintic_d2(double x) { return x * (60.0 + x * (-180.0 + 120.0 * x)); }
  static double quintic_i(double x) {  // integral of quintic from 0
    return x * x * x * x * (2.5 + x * (-3.0 + x));
  }
};

using ReferenceGenerator =
    std::variant<ConstantRef, SinusoidRef, ChirpRef, StepRampRef>;

inline ReferenceSample sample_reference(const ReferenceGenerator& gen, double t) {
  return std::visit([t](const auto& g) { return g.sample(t); }, gen);
}

/// Certainty-equivalent tracking law: friction feedforward on the estimates
/// plus target error dynamics on (x1 - r, x2hat - dr).
inline double control(const ObserverOutput& out, double x1,
                      const ReferenceSample& ref, const ControllerGains& g,
                      double vartheta) {
  assert(g.valid());
  return out.theta1hat * out.x2hat +
         out.theta2hat * std::tanh(vartheta * out.x2hat) + ref.ddr -
         g.alpha1 * (x1 - ref.r) - g.alpha2 * (out.x2hat - ref.dr);
}

// Ground-truth-based signals. These exist for analysis of simulated runs
// only; nothing in the control path may depend on them.
namespace diag {

/// The law the controller would apply if velocity and friction parameters
/// were known exactly.
inline double ideal_control(const MechState& x, const FrictionParams& p,
                            const ReferenceSample& ref,
                            const ControllerGains& g) {
  return p.theta1 * x[1] + p.theta2 * std::tanh(p.vartheta * x[1]) + ref.ddr -
         g.alpha1 * (x[0] - ref.r) - g.alpha2 * (x[1] - ref.dr);
}

/// Deviation of the certainty-equivalent law from the ideal one, expanded in
/// the estimation errors. Identical to control() - ideal_control() by
/// construction.
inline double epsilon_t(double x2_true, const ErrorVector& e,
                        const FrictionParams& p, double alpha2) {
  const double x2hat = x2_true + e.x2tilde;
  const double th_hat = std::tanh(p.vartheta * x2hat);
  return p.theta1 * e.x2tilde + e.theta1tilde * x2hat +
         e.theta2tilde * th_hat +
         p.theta2 * (th_hat - std::tanh(p.vartheta * x2_true)) -
         alpha2 * e.x2tilde;
}

}  // namespace diag
}  // namespace afc
