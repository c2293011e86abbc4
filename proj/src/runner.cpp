#include "afc/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "afc/errors.hpp"
#include "afc/excitation.hpp"
#include "afc/plots.hpp"

namespace afc {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct RunPlan {
  std::string name;
  double k1 = 1.0;
  ExplicitInit init;
  std::uint64_t seed = 0;
  bool seeded = false;
};

std::string run_label(const Scenario& s, double k1, int draw, int n_draws) {
  std::string label;
  if (s.k1_values.size() > 1 || s.k1_auto) label = "k1_" + format_double(k1);
  if (n_draws > 1) {
    if (!label.empty()) label += "_";
    label += "draw" + std::to_string(draw);
  }
  if (label.empty()) label = "run";
  return label;
}

// Deterministic uniform draw, independent of the standard library's
// distribution implementation.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::vector<RunPlan> plan_runs(const Scenario& s) {
  std::vector<double> k1s = s.k1_values;
  if (s.k1_auto) {
    const auto& hp = std::get<HydroPlant>(s.plant).params;
    const double a1l = s.alpha1_lyap.value_or(2.0 / hp.a1);
    const double kmin = k1_min(*s.theta2_upper, s.vartheta, hp, a1l);
    if (!(kmin > 0.0)) {
      throw ConfigError(
          "observer.k1_auto: certificate yields k1_min = 0 (any positive gain "
          "certifies); set observer.k1 explicitly");
    }
    k1s = {kmin};
  }

  const Eigen::Index pd = std::holds_alternative<MechPlant>(s.plant) ? 2 : 3;
  std::vector<ExplicitInit> inits;
  std::uint64_t seed = s.sim.seed.value_or(0);
  bool seeded = s.sim.seed.has_value();
  if (const auto* e = std::get_if<ExplicitInit>(&s.init)) {
    inits.push_back(*e);
  } else {
    const auto& box = std::get<RandomBoxInit>(s.init);
    seeded = true;
    std::mt19937_64 rng(seed);
    for (int d = 0; d < box.draws; ++d) {
      Eigen::VectorXd draw(box.low.size());
      for (Eigen::Index i = 0; i < draw.size(); ++i) {
        draw[i] = uniform(rng, box.low[i], box.high[i]);
      }
      inits.push_back({draw.head(pd), draw.tail(draw.size() - pd)});
    }
  }

  std::vector<RunPlan> plans;
  for (const double k1 : k1s) {
    for (std::size_t d = 0; d < inits.size(); ++d) {
      RunPlan p;
      p.name = run_label(s, k1, static_cast<int>(d), static_cast<int>(inits.size()));
      p.k1 = k1;
      p.init = inits[d];
      p.seed = seed;
      p.seeded = seeded;
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

// The scenario as actually executed by one run: single k1, explicit init.
std::string effective_echo(const Scenario& s, const RunPlan& plan) {
  Scenario eff = s;
  eff.k1_auto = false;
  eff.k1_values = {plan.k1};
  eff.init = plan.init;
  if (plan.seeded) eff.sim.seed = plan.seed;
  return serialize_scenario(eff);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mtx;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mtx);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

ordered_json metrics_json(const Metrics& m, double t0, double t1) {
  ordered_json j;
  j["window"] = {t0, t1};
  j["rms_e1"] = m.rms_e1;
  j["max_abs_e1"] = m.max_abs_e1;
  j["rms_x2tilde"] = m.rms_x2tilde;
  j["final_tilde_theta1"] = m.final_tilde_theta1;
  j["final_tilde_theta2"] = m.final_tilde_theta2;
  j["h_monotonicity_violations"] = m.h_monotonicity_violations;
  if (m.u_monotonicity_violations) {
    j["u_monotonicity_violations"] = *m.u_monotonicity_violations;
  } else {
    j["u_monotonicity_violations"] = nullptr;
  }
  return j;
}

}  // namespace

void write_excitation_csv(const ExcitationReport& rep, const ExcitationSpec& spec,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "# excitation report, mode: " << spec.mode << '\n';
  if (rep.pe_verdict) {
    out << "# pe_verdict: "
        << (*rep.pe_verdict == PeVerdict::satisfied ? "satisfied" : "violated")
        << " (T=" << format_double(rep.pe_window)
        << ", mu=" << format_double(rep.pe_mu)
        << ", worst window index=" << rep.worst_index << ")\n";
  }
  if (!rep.terms.empty()) {
    out << "# phi_sup_norm: " << format_double(rep.phi_sup_norm) << '\n';
  }
  out << "# growth_slope: " << format_double(rep.growth_slope) << '\n';
  out << "index,t_start,t_end,lambda_min,term,partial_sum\n";
  for (std::size_t i = 0; i < rep.windows.size(); ++i) {
    const double term = rep.terms.empty() ? rep.lambda_series[i] * rep.lambda_series[i]
                                          : rep.terms[i];
    const double partial =
        rep.terms.empty() ? rep.sum_lambda_sq[i] : rep.partial_sums[i];
    out << i << ',' << format_double(rep.windows[i].t_start) << ','
        << format_double(rep.windows[i].t_end) << ','
        << format_double(rep.windows[i].lambda_min) << ','
        << format_double(term) << ',' << format_double(partial) << '\n';
  }
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

ExcitationReport analyze_log(const TrajectoryLog& log, const ExcitationSpec& spec,
                             double vartheta) {
  const RegressorSeries rs =
      make_regressor(log.column("t"), log.column("hat_x2"), vartheta);
  const double t0 = rs.times[0];
  const double t1 = rs.times[rs.times.size() - 1];
  if (spec.mode == "pe") {
    return check_pe(rs, spec.window, spec.mu, spec.stride);
  }
  if (spec.mode == "intervals") {
    std::vector<std::pair<double, double>> windows;
    for (double t = t0; t + spec.window <= t1 + 1e-9 * (1.0 + t1);
         t += spec.window + spec.gap) {
      windows.emplace_back(t, spec.window);
    }
    return interval_excitation(rs, windows);
  }
  std::vector<double> partition;
  for (double t = t0; t <= t1 + 1e-9 * (1.0 + t1); t += spec.partition_dt) {
    partition.push_back(std::min(t, t1));
  }
  if (partition.size() < 2) {
    throw ConfigError("output.excitation.partition_dt exceeds the log span");
  }
  return conservative_check(rs, partition);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoError("EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.good()) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

int run_scenario(const Scenario& s, const fs::path& out_root, int jobs) {
  const std::vector<RunPlan> plans = plan_runs(s);
  const fs::path base = out_root / s.output.directory;
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw IoError("cannot create '" + base.string() + "': " + ec.message());

  struct Outcome {
    bool diverged = false;
    double diverged_at = 0.0;
    std::vector<std::string> files;  // relative to base
    ordered_json metrics;
    std::vector<std::string> columns;
    bool has_excitation = false;
  };
  std::vector<Outcome> outcomes(plans.size());

  const double w0 = 0.8 * s.sim.t_end;  // default reporting window: final 20%
  const double w1 = s.sim.t_end;

  parallel_for(plans.size(), jobs, [&](std::size_t i) {
    const RunPlan& plan = plans[i];
    Outcome& out = outcomes[i];
    const fs::path dir = base / plan.name;
    fs::create_directories(dir);

    ClosedLoopSystem sys = make_system(s, plan.k1);
    SimConfig cfg = s.sim;
    if (plan.seeded) cfg.seed = plan.seed;
    const InitialState init{plan.init.plant, plan.init.observer};

    TrajectoryLog log;
    std::optional<double> diverged_at;
    try {
      log = simulate(sys, cfg, init);
    } catch (DivergenceError& e) {
      log = std::move(e.partial);
      diverged_at = e.time;
      out.diverged = true;
      out.diverged_at = e.time;
    }
    log.scenario_echo = effective_echo(s, plan);
    write_trajectory_csv(log, dir / "log.csv", diverged_at);
    out.files.push_back(plan.name + "/log.csv");
    out.columns = log.names;

    if (!out.diverged) {
      const Metrics m = metrics(log, w0, w1);
      write_text(dir / "metrics.json", metrics_json(m, w0, w1).dump(2) + "\n");
      out.metrics = metrics_json(m, w0, w1);
      out.files.push_back(plan.name + "/metrics.json");

      if (s.output.excitation) {
        const ExcitationReport rep = analyze_log(log, *s.output.excitation, s.vartheta);
        write_excitation_csv(rep, *s.output.excitation, dir / "excitation.csv");
        out.files.push_back(plan.name + "/excitation.csv");
        out.has_excitation = true;
      }
    }
  });

  std::vector<std::string> extra_files;
  if (plans.size() > 1) {
    ordered_json cmp;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (!outcomes[i].diverged) cmp[plans[i].name] = outcomes[i].metrics;
    }
    write_text(base / "comparison_metrics.json", cmp.dump(2) + "\n");
    extra_files.emplace_back("comparison_metrics.json");
  }

  if (s.output.emit_plots) {
    std::vector<PlotRun> runs;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (outcomes[i].diverged) continue;
      PlotRun r;
      r.label = plans[i].name;
      r.log_csv = plans[i].name + "/log.csv";
      if (outcomes[i].has_excitation) {
        r.excitation_csv = plans[i].name + "/excitation.csv";
      }
      runs.push_back(std::move(r));
    }
    if (!runs.empty()) {
      std::size_t first = 0;
      while (first < outcomes.size() && outcomes[first].diverged) ++first;
      const auto figures = applicable_figures(
          outcomes[first].columns, runs.front().excitation_csv.has_value());
      for (const auto& fig : figures) {
        std::vector<PlotRun> abs_runs = runs;
        for (auto& r : abs_runs) {
          r.log_csv = base / r.log_csv;
          if (r.excitation_csv) *r.excitation_csv = base / *r.excitation_csv;
        }
        emit_plot_script(fig, abs_runs, base / ("fig_" + fig + ".py"));
        extra_files.push_back("fig_" + fig + ".py");
      }
    }
  }

  // Manifest last: it lists every other output with its hash.
  ordered_json manifest;
  manifest["scenario_name"] = s.name;
  manifest["scenario"] = nlohmann::ordered_json::parse(serialize_scenario(s));
  ordered_json runs = ordered_json::array();
  bool any_diverged = false;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    ordered_json r;
    r["name"] = plans[i].name;
    r["k1"] = plans[i].k1;
    r["diverged"] = outcomes[i].diverged;
    if (outcomes[i].diverged) {
      r["diverged_at"] = outcomes[i].diverged_at;
      any_diverged = true;
    }
    ordered_json files;
    for (const auto& f : outcomes[i].files) files[f] = sha256_file(base / f);
    r["files"] = std::move(files);
    runs.push_back(std::move(r));
  }
  manifest["runs"] = std::move(runs);
  ordered_json files;
  for (const auto& f : extra_files) files[f] = sha256_file(base / f);
  manifest["files"] = std::move(files);
  write_text(base / "manifest.json", manifest.dump(2) + "\n");

  if (any_diverged) {
    std::fprintf(stderr, "error: at least one run diverged; see manifest\n");
    return 3;
  }
  return 0;
}

}  // namespace afc
