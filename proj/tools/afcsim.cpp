// Batch front end: run scenario files, analyze logged excitation, emit plot
// scripts. Exit codes: 0 success, 2 configuration error, 3 divergence,
// 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afc/errors.hpp"
#include "afc/plots.hpp"
#include "afc/runner.hpp"
#include "afc/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw afc::IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_simulate(const fs::path& scenario_path, const fs::path& out_dir, int jobs) {
  const afc::Scenario s = afc::parse_scenario(read_file(scenario_path));
  return afc::run_scenario(s, out_dir, jobs);
}

double vartheta_from_log(const afc::TrajectoryLog& log) {
  if (log.scenario_echo.empty()) {
    throw afc::ConfigError(
        "log carries no scenario echo; pass --vartheta explicitly");
  }
  const auto j = nlohmann::json::parse(log.scenario_echo, nullptr, false);
  if (j.is_discarded() || !j.contains("observer") ||
      !j["observer"].contains("vartheta")) {
    throw afc::ConfigError(
        "cannot recover observer.vartheta from the log header; pass --vartheta");
  }
  return j["observer"]["vartheta"].get<double>();
}

int cmd_analyze(const fs::path& log_path, const afc::ExcitationSpec& spec,
                double vartheta_flag, fs::path out_path) {
  const afc::TrajectoryLog log = afc::read_trajectory_csv(log_path);
  const double vartheta =
      vartheta_flag > 0.0 ? vartheta_flag : vartheta_from_log(log);
  const afc::ExcitationReport rep = afc::analyze_log(log, spec, vartheta);
  if (out_path.empty()) {
    out_path = log_path.parent_path() / ("excitation_" + spec.mode + ".csv");
  }
  afc::write_excitation_csv(rep, spec, out_path);

  std::printf("windows: %zu\n", rep.windows.size());
  if (rep.pe_verdict) {
    std::printf("pe: %s (T=%s, mu=%s), worst lambda_min=%s at window %zu\n",
                *rep.pe_verdict == afc::PeVerdict::satisfied ? "satisfied"
                                                             : "violated",
                afc::format_double(rep.pe_window).c_str(),
                afc::format_double(rep.pe_mu).c_str(),
                afc::format_double(rep.lambda_series[rep.worst_index]).c_str(),
                rep.worst_index);
  } else if (!rep.terms.empty()) {
    std::printf("normalized partial sum: %s (phi sup norm %s)\n",
                afc::format_double(rep.partial_sums.back()).c_str(),
                afc::format_double(rep.phi_sup_norm).c_str());
  } else {
    std::printf("sum lambda_k^2: %s, growth slope %s per window\n",
                afc::format_double(rep.sum_lambda_sq.back()).c_str(),
                afc::format_double(rep.growth_slope).c_str());
  }
  std::printf("report: %s\n", out_path.string().c_str());
  return 0;
}

int cmd_plot(const fs::path& manifest_path, const std::string& figure,
             fs::path out_path) {
  const auto manifest = nlohmann::json::parse(read_file(manifest_path));
  const fs::path base = manifest_path.parent_path();
  std::vector<afc::PlotRun> runs;
  for (const auto& r : manifest.at("runs")) {
    if (r.value("diverged", false)) continue;
    afc::PlotRun run;
    run.label = r.at("name").get<std::string>();
    for (const auto& f : r.at("files").items()) {
      const std::string& name = f.key();
      if (name.size() >= 7 && name.substr(name.size() - 7) == "log.csv") {
        run.log_csv = base / name;
      } else if (name.find("excitation") != std::string::npos) {
        run.excitation_csv = base / name;
      }
    }
    if (run.log_csv.empty()) continue;
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw afc::ConfigError("manifest lists no usable runs");
  if (out_path.empty()) out_path = base / ("fig_" + figure + ".py");
  afc::emit_plot_script(figure, runs, out_path);
  std::printf("%s\n", out_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"friction-compensation simulation batch tool"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run a scenario file");
  std::string scenario_path;
  std::string sim_out = "out";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sim->add_option("--out", sim_out, "output root directory");
  sim->add_option("--jobs", jobs, "worker pool size for sweeps");

  auto* ana = app.add_subcommand("analyze-excitation",
                                 "windowed Gram analysis of a trajectory log");
  std::string log_path;
  afc::ExcitationSpec spec;
  double vartheta_flag = 0.0;
  std::string report_path;
  ana->add_option("log", log_path, "trajectory log CSV")->required();
  ana->add_option("--mode", spec.mode, "pe | intervals | conservative")
      ->required()
      ->check(CLI::IsMember({"pe", "intervals", "conservative"}));
  ana->add_option("--window", spec.window, "window width T [s] (pe, intervals)");
  ana->add_option("--mu", spec.mu, "excitation threshold (pe)");
  ana->add_option("--stride", spec.stride, "slide step [s]; default: sampling period");
  ana->add_option("--gap", spec.gap, "gap between interval windows [s]");
  ana->add_option("--partition-dt", spec.partition_dt,
                  "partition interval [s] (conservative)");
  ana->add_option("--vartheta", vartheta_flag,
                  "tanh sharpness; default: recovered from the log header");
  ana->add_option("--report", report_path, "report CSV path");

  auto* plot = app.add_subcommand("plot", "emit a matplotlib script for a figure");
  std::string manifest_path;
  std::string figure;
  std::string plot_out;
  plot->add_option("manifest", manifest_path, "manifest.json from a simulate run")
      ->required();
  plot->add_option("--figure", figure, "figure name")
      ->required()
      ->check(CLI::IsMember(afc::plot_figures()));
  plot->add_option("--out", plot_out, "script path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, sim_out, jobs);
    if (ana->parsed()) {
      // Mode-specific requirements mirror scenario validation.
      if (spec.mode == "pe" && (!(spec.window > 0.0) || !(spec.mu > 0.0))) {
        throw afc::ConfigError("pe mode needs --window > 0 and --mu > 0");
      }
      if (spec.mode == "intervals" && !(spec.window > 0.0)) {
        throw afc::ConfigError("intervals mode needs --window > 0");
      }
      if (spec.mode == "conservative" && !(spec.partition_dt > 0.0)) {
        throw afc::ConfigError("conservative mode needs --partition-dt > 0");
      }
      return cmd_analyze(log_path, spec, vartheta_flag, report_path);
    }
    return cmd_plot(manifest_path, figure, plot_out);
  } catch (const afc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const afc::DivergenceError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const afc::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
}
