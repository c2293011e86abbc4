#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "afc/controller.hpp"
#include "afc/models.hpp"
#include "afc/observer.hpp"
#include "afc/trajectory_log.hpp"

// Fixed-step RK4 integration of the coupled plant + observer (+ controller)
// system. One simulation is strictly sequential; independent runs can execute
// concurrently.

namespace afc {

struct MechPlant {
  FrictionParams friction{};
};
struct HydroPlant {
  HydroParams params{};
};
struct LuGrePlant {
  LuGreParams params{};
};
using Plant = std::variant<MechPlant, HydroPlant, LuGrePlant>;

struct ConstantInput {
  double value = 0.0;
};
struct SinusoidInput {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
};
using InputSignal = std::variant<ConstantInput, SinusoidInput>;

inline double eval(const InputSignal& in, double t) {
  if (const auto* c = std::get_if<ConstantInput>(&in)) return c->value;
  const auto& s = std::get<SinusoidInput>(in);
  return s.amplitude * std::sin(s.omega * t + s.phase);
}

/// Either the tracking controller or a fixed open-loop input (observer-only
/// studies).
using Drive = std::variant<ControllerGains, InputSignal>;

struct ClosedLoopSystem {
  Plant plant{MechPlant{}};
  ObserverGains observer{};
  Drive drive{ControllerGains{}};
  ReferenceGenerator reference{ConstantRef{}};
  std::optional<double> alpha1_lyap{};  ///< hydro U weight; default 2/a1
};

struct SimConfig {
  double t_end = 10.0;
  double dt = 0.0;      ///< 0 selects the per-plant default
  int log_every = 100;  ///< decimation: log every n-th step
  std::optional<std::uint64_t> seed{};  ///< recorded in the log header
};

/// Initial plant and observer states; dimensions must match the plant kind
/// (mech: 2+3, hydro: 3+4, lugre: 3+3).
struct InitialState {
  Eigen::VectorXd plant;
  Eigen::VectorXd observer;
};

double default_dt(const Plant& p);  ///< 1e-4 s; 1e-5 s for the stiff LuGre plant
double dt_ceiling(const Plant& p);  ///< above this a warning is logged to stderr

/// The (theta1, theta2)-equivalent truth for error columns: the friction
/// coefficients for the mech/hydro plants, (sigma2, FC) for the LuGre plant.
std::pair<double, double> theta_truth(const Plant& p);

/// Thrown when the integrated state stops being finite. Carries the rows
/// logged before the failure so callers can flush a partial log.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(double t)
      : std::runtime_error("integration diverged at t = " + format_double(t)),
        time(t) {}

  double time;
  TrajectoryLog partial;
};

/// Classical 4-stage Runge-Kutta update. Throws DivergenceError when the
/// result is not finite.
template <class F, class State>
State rk4_step(F&& f, const State& y, double t, double dt) {
  const State k1 = f(y, t);
  const State k2 = f(y + (0.5 * dt) * k1, t + 0.5 * dt);
  const State k3 = f(y + (0.5 * dt) * k2, t + 0.5 * dt);
  const State k4 = f(y + dt * k3, t + dt);
  const State next = y + dt * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
  if (!next.allFinite()) throw DivergenceError(t + dt);
  return next;
}

/// Integrate the stacked plant + observer state. The observer output and the
/// control are recomputed algebraically at every RK4 stage, so nothing is
/// held stale across a step. Logged rows carry the full diagnostic column set.
TrajectoryLog simulate(const ClosedLoopSystem& sys, const SimConfig& cfg,
                       const InitialState& init);

/// Scalar summary of a log over a time window.
struct Metrics {
  double rms_e1 = 0.0;
  double max_abs_e1 = 0.0;
  double rms_x2tilde = 0.0;
  double final_tilde_theta1 = 0.0;
  double final_tilde_theta2 = 0.0;
  int h_monotonicity_violations = 0;  ///< per-step increases beyond 1e-9 * max(1, H)
  std::optional<int> u_monotonicity_violations{};  ///< hydro logs only
};

Metrics metrics(const TrajectoryLog& log, double t0, double t1);

}  // namespace afc
