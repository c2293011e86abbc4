#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cmath>

// Plant models: a friction-loaded motor, a hydro-mechanical cylinder and a
// LuGre bristle plant. Units are SI by convention throughout; nothing checks
// them at runtime. Inertia is lumped into the input and the coefficients.

namespace afc {

/// Viscous + Coulomb friction coefficients. The Coulomb relay is smoothed as
/// theta2 * tanh(vartheta * v), with vartheta large enough that the tanh acts
/// as a switch.
struct FrictionParams {
  double theta1 = 0.4;      ///< viscous coefficient [1/s]
  double theta2 = 1.0;      ///< Coulomb level [m/s^2]
  double vartheta = 100.0;  ///< tanh sharpness [s/m]

  bool valid() const {
    return std::isfinite(theta1) && std::isfinite(theta2) &&
           std::isfinite(vartheta) && theta1 > 0.0 && theta2 > 0.0 &&
           vartheta > 0.0;
  }
};

/// Known positive constants of the hydro-mechanical plant. Friction acts on
/// the velocity equation; the input drives the load-pressure equation.
struct HydroParams {
  double a1 = 1.0;
  double a2 = 1.0;
  double a3 = 1.0;
  FrictionParams friction{};

  bool valid() const {
    return std::isfinite(a1) && std::isfinite(a2) && std::isfinite(a3) &&
           a1 > 0.0 && a2 > 0.0 && a3 > 0.0 && friction.valid();
  }
};

/// LuGre bristle-friction coefficients. Defaults are the classic bench set
/// (stiff: sigma0 = 1e5, Stribeck velocity 1 mm/s).
struct LuGreParams {
  double sigma0 = 1e5;                ///< bristle stiffness
  double sigma1 = std::sqrt(1e5);     ///< bristle damping
  double sigma2 = 0.4;                ///< viscous coefficient
  double FC = 1.0;                    ///< Coulomb level
  double FS = 1.5;                    ///< static level
  double vS = 1e-3;                   ///< Stribeck velocity

  bool valid() const {
    return std::isfinite(sigma0) && std::isfinite(sigma1) &&
           std::isfinite(sigma2) && std::isfinite(FC) && std::isfinite(FS) &&
           std::isfinite(vS) && sigma0 > 0.0 && sigma1 > 0.0 && sigma2 > 0.0 &&
           FC > 0.0 && FS >= FC && vS > 0.0;
  }
};

using MechState = Eigen::Vector2d;   ///< [position, velocity]
using HydroState = Eigen::Vector3d;  ///< [displacement, velocity, load pressure]
using LuGreState = Eigen::Vector3d;  ///< [position, velocity, bristle deflection]

/// Smoothed stiction + Coulomb force acting on a velocity v.
inline double friction_force(double v, const FrictionParams& p) {
  return -p.theta1 * v - p.theta2 * std::tanh(p.vartheta * v);
}

inline MechState mech_rhs(const MechState& s, const FrictionParams& p, double u) {
  assert(p.valid());
  return {s[1], friction_force(s[1], p) + u};
}

inline HydroState hydro_rhs(const HydroState& s, const HydroParams& p, double u) {
  assert(p.valid());
  return {s[1],
          friction_force(s[1], p.friction) + p.a1 * s[2],
          -p.a2 * s[1] - p.a3 * s[2] + u};
}

/// Stribeck curve g(v) in [FC, FS]; g(0) = FS, g(+-inf) -> FC. Strictly
/// positive, so the bristle equation never divides by zero.
inline double lugre_g(double v, const LuGreParams& p) {
  const double w = v / p.vS;
  return p.FC + (p.FS - p.FC) * std::exp(-w * w);
}

inline LuGreState lugre_rhs(const LuGreState& s, const LuGreParams& p, double u) {
  assert(p.valid());
  const double v = s[1];
  const double z = s[2];
  // zdot feeds the velocity equation directly; evaluate once.
  const double zdot = v - p.sigma0 * std::abs(v) * z / lugre_g(v, p);
  return {v, -p.sigma2 * v - p.sigma1 * zdot - p.sigma0 * z + u, zdot};
}

}  // namespace afc
