#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "afc/engine.hpp"

namespace afc {

/// Fixed initial plant/observer states.
struct ExplicitInit {
  Eigen::VectorXd plant;
  Eigen::VectorXd observer;
};

/// Uniform draws over a box in the stacked (plant, observer) state space; one
/// run per draw, driven by sim.seed.
struct RandomBoxInit {
  Eigen::VectorXd low;
  Eigen::VectorXd high;
  int draws = 1;
};

using InitSpec = std::variant<ExplicitInit, RandomBoxInit>;

/// Optional post-run excitation analysis of the logged regressor.
struct ExcitationSpec {
  std::string mode;          ///< "pe" | "intervals" | "conservative"
  double window = 0.0;       ///< pe/intervals window width T
  double mu = 0.0;           ///< pe threshold
  double stride = 0.0;       ///< pe slide step; 0 = sampling period
  double gap = 0.0;          ///< intervals: spacing between windows
  double partition_dt = 0.0; ///< conservative: uniform partition interval
};

struct OutputSpec {
  std::string directory;  ///< defaults to the scenario name
  bool emit_plots = false;
  std::optional<ExcitationSpec> excitation{};
};

/// One parsed scenario file: a plant, an observer (single k1 or a sweep
/// list, or an auto gain from the hydro certificate), a drive, a reference,
/// initial conditions and the sim/output settings.
struct Scenario {
  std::string name = "scenario";
  Plant plant{MechPlant{}};

  std::vector<double> k1_values{1.0};
  bool k1_auto = false;
  double vartheta = 100.0;
  bool hydro_observer = false;           ///< pressure-estimate channel enabled
  std::optional<double> theta2_upper{};  ///< required by k1_auto
  std::optional<double> alpha1_lyap{};   ///< hydro U weight; default 2/a1

  Drive drive{ControllerGains{}};
  ReferenceGenerator reference{ConstantRef{}};
  InitSpec init{ExplicitInit{}};
  SimConfig sim{};
  OutputSpec output{};
};

/// Parse and validate a scenario document. Strict: unknown keys are rejected;
/// every error message names the offending path.
Scenario parse_scenario(const std::string& text);

/// Inverse of parse_scenario (parse(serialize(s)) reproduces s field for
/// field). indent < 0 emits a single line.
std::string serialize_scenario(const Scenario& s, int indent = -1);

/// The closed-loop system a scenario describes, at one k1 value.
ClosedLoopSystem make_system(const Scenario& s, double k1);

}  // namespace afc
