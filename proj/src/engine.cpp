#include "afc/engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "afc/errors.hpp"

namespace afc {
namespace {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kMonotonicityTol = 1e-9;

long long step_count(double t_end, double dt) {
  const double q = t_end / dt;
  const double r = std::round(q);
  // Snap to the integer step count when t_end/dt is one up to representation
  // error; otherwise the trailing partial step is not taken.
  if (std::abs(q - r) <= 1e-6 * std::max(1.0, q)) return static_cast<long long>(r);
  return static_cast<long long>(std::floor(q));
}

template <int N, class Rhs, class RowFn>
TrajectoryLog integrate(Rhs&& rhs, Vec<N> y, double dt, const SimConfig& cfg,
                        std::vector<std::string> names, RowFn&& fill_row) {
  const long long n_steps = step_count(cfg.t_end, dt);
  const long long n_rows = n_steps / cfg.log_every + 1;

  TrajectoryLog log;
  log.names = std::move(names);
  log.seed = cfg.seed;
  log.data.resize(n_rows, static_cast<Eigen::Index>(log.names.size()));
  log.data.row(0) = fill_row(0.0, y);

  Eigen::Index written = 1;
  try {
    for (long long i = 1; i <= n_steps; ++i) {
      y = rk4_step(rhs, y, static_cast<double>(i - 1) * dt, dt);
      if (i % cfg.log_every == 0) {
        log.data.row(written++) = fill_row(static_cast<double>(i) * dt, y);
      }
    }
  } catch (DivergenceError& e) {
    log.data.conservativeResize(written, Eigen::NoChange);
    e.partial = std::move(log);
    throw;
  }
  return log;
}

struct DriveContext {
  const Drive& drive;
  const ReferenceGenerator& reference;
  double vartheta;

  bool closed_loop() const {
    return std::holds_alternative<ControllerGains>(drive);
  }
  double input(const ObserverOutput& out, double x1, double t,
               const ReferenceSample& rs) const {
    if (const auto* g = std::get_if<ControllerGains>(&drive)) {
      return control(out, x1, rs, *g, vartheta);
    }
    return eval(std::get<InputSignal>(drive), t);
  }
};

void validate_common(const ClosedLoopSystem& sys, const SimConfig& cfg,
                     double dt) {
  if (!sys.observer.valid()) throw ConfigError("observer gains invalid");
  if (const auto* g = std::get_if<ControllerGains>(&sys.drive)) {
    if (!g->valid()) throw ConfigError("controller gains invalid");
  }
  if (!(dt > 0.0)) throw ConfigError("sim.dt must be positive");
  if (!(cfg.t_end >= dt)) throw ConfigError("sim.t_end must be at least dt");
  if (cfg.log_every < 1) throw ConfigError("sim.log_every must be >= 1");
  if (dt > dt_ceiling(sys.plant)) {
    std::fprintf(stderr,
                 "warning: dt = %g exceeds the recommended ceiling %g for "
                 "this plant kind\n",
                 dt, dt_ceiling(sys.plant));
  }
}

void check_dims(const InitialState& init, Eigen::Index plant_dim,
                Eigen::Index obs_dim) {
  if (init.plant.size() != plant_dim || init.observer.size() != obs_dim) {
    throw ConfigError("initial state dimensions do not match the plant kind");
  }
}

std::vector<std::string> column_names(const Plant& plant) {
  std::vector<std::string> n{"t", "x1", "x2"};
  if (std::holds_alternative<LuGrePlant>(plant)) n.emplace_back("z");
  if (std::holds_alternative<HydroPlant>(plant)) n.emplace_back("x3");
  for (const char* s : {"x2I", "theta1I", "theta2I", "hat_x2", "hat_theta1",
                        "hat_theta2"}) {
    n.emplace_back(s);
  }
  if (std::holds_alternative<HydroPlant>(plant)) n.emplace_back("hat_x3");
  for (const char* s : {"u", "u_star", "epsilon_t", "r", "dr", "ddr", "e1",
                        "tilde_x2", "tilde_theta1", "tilde_theta2"}) {
    n.emplace_back(s);
  }
  if (std::holds_alternative<HydroPlant>(plant)) n.emplace_back("tilde_x3");
  n.emplace_back("H");
  if (std::holds_alternative<HydroPlant>(plant)) n.emplace_back("U");
  return n;
}

// Diagnostic tail shared by all plants: control signals, reference, errors.
struct RowDiag {
  double u, u_star, eps, e1, x2t, tt1, tt2, H;
  ReferenceSample rs;
};

RowDiag diagnostics(const DriveContext& ctx, const ObserverOutput& out,
                    double x1, double x2, double t,
                    const std::pair<double, double>& truth,
                    const ObserverGains& g) {
  RowDiag d{};
  d.rs = sample_reference(ctx.reference, t);
  d.u = ctx.input(out, x1, t, d.rs);
  d.x2t = out.x2hat - x2;
  d.tt1 = out.theta1hat - truth.first;
  d.tt2 = out.theta2hat - truth.second;
  d.u_star = kNan;
  d.eps = kNan;
  if (ctx.closed_loop()) {
    const auto& gains = std::get<ControllerGains>(ctx.drive);
    const FrictionParams ideal{truth.first, truth.second, g.vartheta};
    d.u_star = diag::ideal_control({x1, x2}, ideal, d.rs, gains);
    d.eps = diag::epsilon_t(x2, {d.x2t, d.tt1, d.tt2}, ideal, gains.alpha2);
  }
  d.e1 = x1 - d.rs.r;
  d.H = lyapunov_H({d.x2t, d.tt1, d.tt2}, g.vartheta);
  return d;
}

TrajectoryLog simulate_mech(const MechPlant& plant, const ClosedLoopSystem& sys,
                            const SimConfig& cfg, double dt,
                            const InitialState& init) {
  if (!plant.friction.valid()) throw ConfigError("mech friction params invalid");
  check_dims(init, 2, 3);
  const ObserverGains g = sys.observer;
  const DriveContext ctx{sys.drive, sys.reference, g.vartheta};
  const auto truth = theta_truth(sys.plant);

  auto rhs = [&](const Vec<5>& y, double t) -> Vec<5> {
    const ObserverState os = y.tail<3>();
    const ObserverOutput out = observer_output(os, y[0], g);
    const ReferenceSample rs = sample_reference(ctx.reference, t);
    const double u = ctx.input(out, y[0], t, rs);
    Vec<5> dy;
    dy.head<2>() = mech_rhs(y.head<2>(), plant.friction, u);
    dy.tail<3>() = observer_rhs(os, y[0], u, g);
    return dy;
  };
  auto fill = [&](double t, const Vec<5>& y) -> Eigen::RowVectorXd {
    const ObserverOutput out = observer_output(ObserverState(y.tail<3>()), y[0], g);
    const RowDiag d = diagnostics(ctx, out, y[0], y[1], t, truth, g);
    Eigen::RowVectorXd row(20);
    row << t, y[0], y[1], y[2], y[3], y[4], out.x2hat, out.theta1hat,
        out.theta2hat, d.u, d.u_star, d.eps, d.rs.r, d.rs.dr, d.rs.ddr, d.e1,
        d.x2t, d.tt1, d.tt2, d.H;
    return row;
  };

  Vec<5> y0;
  y0 << init.plant, init.observer;
  return integrate<5>(rhs, y0, dt, cfg, column_names(sys.plant), fill);
}

TrajectoryLog simulate_lugre(const LuGrePlant& plant,
                             const ClosedLoopSystem& sys, const SimConfig& cfg,
                             double dt, const InitialState& init) {
  if (!plant.params.valid()) throw ConfigError("lugre params invalid");
  check_dims(init, 3, 3);
  const ObserverGains g = sys.observer;
  const DriveContext ctx{sys.drive, sys.reference, g.vartheta};
  const auto truth = theta_truth(sys.plant);

  auto rhs = [&](const Vec<6>& y, double t) -> Vec<6> {
    const ObserverState os = y.tail<3>();
    const ObserverOutput out = observer_output(os, y[0], g);
    const ReferenceSample rs = sample_reference(ctx.reference, t);
    const double u = ctx.input(out, y[0], t, rs);
    Vec<6> dy;
    dy.head<3>() = lugre_rhs(y.head<3>(), plant.params, u);
    dy.tail<3>() = observer_rhs(os, y[0], u, g);
    return dy;
  };
  auto fill = [&](double t, const Vec<6>& y) -> Eigen::RowVectorXd {
    const ObserverOutput out = observer_output(ObserverState(y.tail<3>()), y[0], g);
    const RowDiag d = diagnostics(ctx, out, y[0], y[1], t, truth, g);
    Eigen::RowVectorXd row(21);
    row << t, y[0], y[1], y[2], y[3], y[4], y[5], out.x2hat, out.theta1hat,
        out.theta2hat, d.u, d.u_star, d.eps, d.rs.r, d.rs.dr, d.rs.ddr, d.e1,
        d.x2t, d.tt1, d.tt2, d.H;
    return row;
  };

  Vec<6> y0;
  y0 << init.plant, init.observer;
  return integrate<6>(rhs, y0, dt, cfg, column_names(sys.plant), fill);
}

TrajectoryLog simulate_hydro(const HydroPlant& plant,
                             const ClosedLoopSystem& sys, const SimConfig& cfg,
                             double dt, const InitialState& init) {
  if (!plant.params.valid()) throw ConfigError("hydro params invalid");
  check_dims(init, 3, 4);
  const ObserverGains g = sys.observer;
  const DriveContext ctx{sys.drive, sys.reference, g.vartheta};
  const auto truth = theta_truth(sys.plant);
  const double a1_lyap = sys.alpha1_lyap.value_or(2.0 / plant.params.a1);
  if (!(a1_lyap * plant.params.a1 > 1.0)) {
    throw ConfigError("alpha1_lyap must exceed 1/a1");
  }

  auto rhs = [&](const Vec<7>& y, double t) -> Vec<7> {
    const HydroObserverState os = y.tail<4>();
    const ObserverOutput out = observer_output(os.head<3>(), y[0], g);
    const ReferenceSample rs = sample_reference(ctx.reference, t);
    const double u = ctx.input(out, y[0], t, rs);
    Vec<7> dy;
    dy.head<3>() = hydro_rhs(y.head<3>(), plant.params, u);
    dy.tail<4>() = hydro_observer_rhs(os, y[0], u, g, plant.params);
    return dy;
  };
  auto fill = [&](double t, const Vec<7>& y) -> Eigen::RowVectorXd {
    const ObserverOutput out =
        observer_output(ObserverState(y.segment<3>(3)), y[0], g);
    const RowDiag d = diagnostics(ctx, out, y[0], y[1], t, truth, g);
    const double x3t = y[6] - y[2];
    Eigen::RowVectorXd row(24);
    row << t, y[0], y[1], y[2], y[3], y[4], y[5], out.x2hat, out.theta1hat,
        out.theta2hat, y[6], d.u, d.u_star, d.eps, d.rs.r, d.rs.dr, d.rs.ddr,
        d.e1, d.x2t, d.tt1, d.tt2, x3t, d.H,
        d.H + 0.5 * a1_lyap * x3t * x3t;
    return row;
  };

  Vec<7> y0;
  y0 << init.plant, init.observer;
  return integrate<7>(rhs, y0, dt, cfg, column_names(sys.plant), fill);
}

int count_increases(const Eigen::VectorXd& v, Eigen::Index first,
                    Eigen::Index last) {
  int n = 0;
  for (Eigen::Index i = first; i < last; ++i) {
    if (v[i + 1] - v[i] > kMonotonicityTol * std::max(1.0, v[i])) ++n;
  }
  return n;
}

}  // namespace

double default_dt(const Plant& p) {
  return std::holds_alternative<LuGrePlant>(p) ? 1e-5 : 1e-4;
}

double dt_ceiling(const Plant& p) {
  return std::holds_alternative<LuGrePlant>(p) ? 2e-5 : 1e-3;
}

std::pair<double, double> theta_truth(const Plant& p) {
  if (const auto* m = std::get_if<MechPlant>(&p)) {
    return {m->friction.theta1, m->friction.theta2};
  }
  if (const auto* h = std::get_if<HydroPlant>(&p)) {
    return {h->params.friction.theta1, h->params.friction.theta2};
  }
  const auto& l = std::get<LuGrePlant>(p).params;
  return {l.sigma2, l.FC};
}

TrajectoryLog simulate(const ClosedLoopSystem& sys, const SimConfig& cfg,
                       const InitialState& init) {
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(sys.plant);
  validate_common(sys, cfg, dt);
  return std::visit(
      [&](const auto& plant) -> TrajectoryLog {
        using P = std::decay_t<decltype(plant)>;
        if constexpr (std::is_same_v<P, MechPlant>) {
          return simulate_mech(plant, sys, cfg, dt, init);
        } else if constexpr (std::is_same_v<P, HydroPlant>) {
          return simulate_hydro(plant, sys, cfg, dt, init);
        } else {
          return simulate_lugre(plant, sys, cfg, dt, init);
        }
      },
      sys.plant);
}

Metrics metrics(const TrajectoryLog& log, double t0, double t1) {
  const Eigen::VectorXd t = log.column("t");
  const double tol = 1e-9 * (1.0 + std::max(std::abs(t0), std::abs(t1)));
  Eigen::Index first = -1, last = -1;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t[i] >= t0 - tol && t[i] <= t1 + tol) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) throw ConfigError("metrics: no samples in the requested window");

  const Eigen::VectorXd e1 = log.column("e1");
  const Eigen::VectorXd x2t = log.column("tilde_x2");
  const Eigen::VectorXd h = log.column("H");
  const Eigen::Index n = last - first + 1;

  Metrics m;
  m.rms_e1 = std::sqrt(e1.segment(first, n).squaredNorm() / static_cast<double>(n));
  m.max_abs_e1 = e1.segment(first, n).cwiseAbs().maxCoeff();
  m.rms_x2tilde =
      std::sqrt(x2t.segment(first, n).squaredNorm() / static_cast<double>(n));
  m.final_tilde_theta1 = log.column("tilde_theta1")[last];
  m.final_tilde_theta2 = log.column("tilde_theta2")[last];
  m.h_monotonicity_violations = count_increases(h, first, last);
  if (log.has("U")) {
    m.u_monotonicity_violations = count_increases(log.column("U"), first, last);
  }
  return m;
}

}  // namespace afc
