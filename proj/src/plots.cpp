#include "afc/plots.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "afc/errors.hpp"

namespace afc {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kFigures = {
    "tracking",     "tracking_error", "observer_error",
    "parameter_errors", "control",    "excitation"};

std::vector<std::string> required_columns(const std::string& figure) {
  if (figure == "tracking") return {"t", "r", "x1"};
  if (figure == "tracking_error") return {"t", "e1"};
  if (figure == "observer_error") return {"t", "x2", "hat_x2", "tilde_x2"};
  if (figure == "parameter_errors") return {"t", "tilde_theta1", "tilde_theta2"};
  if (figure == "control") return {"t", "u", "u_star"};
  if (figure == "excitation") return {};
  throw ConfigError("unknown figure '" + figure + "'");
}

std::vector<std::string> csv_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> names;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) names.push_back(field);
    return names;
  }
  throw IoError("no header row in '" + path.string() + "'");
}

std::string py_str(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '\\' || c == '"') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

const std::vector<std::string>& plot_figures() { return kFigures; }

std::vector<std::string> applicable_figures(
    const std::vector<std::string>& columns, bool has_excitation) {
  std::vector<std::string> out;
  for (const auto& fig : kFigures) {
    if (fig == "excitation") {
      if (has_excitation) out.push_back(fig);
      continue;
    }
    const auto req = required_columns(fig);
    const bool ok = std::all_of(req.begin(), req.end(), [&](const auto& c) {
      return std::find(columns.begin(), columns.end(), c) != columns.end();
    });
    if (ok) out.push_back(fig);
  }
  return out;
}

void emit_plot_script(const std::string& figure, const std::vector<PlotRun>& runs,
                      const fs::path& out_py) {
  if (std::find(kFigures.begin(), kFigures.end(), figure) == kFigures.end()) {
    throw ConfigError("unknown figure '" + figure + "'");
  }
  if (runs.empty()) throw ConfigError("emit_plot_script: no runs given");

  const auto req = required_columns(figure);
  for (const auto& run : runs) {
    if (figure == "excitation") {
      if (!run.excitation_csv) {
        throw ConfigError("figure 'excitation' needs an excitation report for run '" +
                          run.label + "'");
      }
      continue;
    }
    const auto cols = csv_header(run.log_csv);
    for (const auto& c : req) {
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) {
        throw ConfigError("log '" + run.log_csv.string() + "' lacks column '" + c +
                          "' required by figure '" + figure + "'");
      }
    }
  }

  const fs::path script_dir = out_py.parent_path();
  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
     << "# " << figure << " figure; regenerate with the 'plot' subcommand.\n"
     << "import os\n"
     << "import numpy as np\n"
     << "import matplotlib\n"
     << "matplotlib.use(\"Agg\")\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "base = os.path.dirname(os.path.abspath(__file__))\n"
     << "runs = [\n";
  for (const auto& run : runs) {
    const fs::path source =
        figure == "excitation" ? *run.excitation_csv : run.log_csv;
    std::error_code ec;
    fs::path rel = fs::relative(source, script_dir, ec);
    if (ec || rel.empty()) rel = source;
    py << "    (" << py_str(run.label) << ", " << py_str(rel.string()) << "),\n";
  }
  py << "]\n\n"
     << "def load(rel):\n"
     << "    with open(os.path.join(base, rel)) as f:\n"
     << "        lines = [ln.strip() for ln in f\n"
     << "                 if ln.strip() and not ln.startswith(\"#\")]\n"
     << "    names = lines[0].split(\",\")\n"
     << "    data = np.array([[float(x) for x in ln.split(\",\")] for ln in lines[1:]])\n"
     << "    return {n: data[:, i] for i, n in enumerate(names)}\n\n";

  if (figure == "tracking") {
    py << "fig, ax = plt.subplots(figsize=(7, 4))\n"
       << "d0 = load(runs[0][1])\n"
       << "ax.plot(d0[\"t\"], d0[\"r\"], \"k--\", label=\"r\")\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax.plot(d[\"t\"], d[\"x1\"], label=\"x1, \" + label)\n"
       << "ax.set_xlabel(\"t [s]\")\nax.set_ylabel(\"position\")\n";
  } else if (figure == "tracking_error") {
    py << "fig, ax = plt.subplots(figsize=(7, 4))\n"
       << "t_zoom = None\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax.plot(d[\"t\"], d[\"e1\"], label=label)\n"
       << "    t_zoom = 0.8 * d[\"t\"][-1]\n"
       << "axins = ax.inset_axes([0.45, 0.55, 0.5, 0.4])\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    m = d[\"t\"] >= t_zoom\n"
       << "    axins.plot(d[\"t\"][m], d[\"e1\"][m])\n"
       << "axins.grid(True, alpha=0.3)\n"
       << "ax.indicate_inset_zoom(axins, edgecolor=\"gray\")\n"
       << "ax.set_xlabel(\"t [s]\")\nax.set_ylabel(\"e1 = x1 - r\")\n";
  } else if (figure == "observer_error") {
    py << "fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))\n"
       << "d0 = load(runs[0][1])\n"
       << "ax0.plot(d0[\"t\"], d0[\"x2\"], label=\"x2\")\n"
       << "ax0.plot(d0[\"t\"], d0[\"hat_x2\"], \"--\", label=\"hat_x2 (\" + runs[0][0] + \")\")\n"
       << "ax0.set_xlabel(\"t [s]\")\nax0.set_ylabel(\"velocity\")\n"
       << "ax0.legend()\nax0.grid(True, alpha=0.3)\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax1.plot(d[\"t\"], d[\"tilde_x2\"], label=label)\n"
       << "ax1.set_xlabel(\"t [s]\")\nax1.set_ylabel(\"hat_x2 - x2\")\n"
       << "ax = ax1\n";
  } else if (figure == "parameter_errors") {
    py << "fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax0.plot(d[\"t\"], d[\"tilde_theta1\"], label=label)\n"
       << "    ax1.plot(d[\"t\"], d[\"tilde_theta2\"], label=label)\n"
       << "ax0.set_xlabel(\"t [s]\")\nax0.set_ylabel(\"tilde_theta1\")\n"
       << "ax0.legend()\nax0.grid(True, alpha=0.3)\n"
       << "ax1.set_xlabel(\"t [s]\")\nax1.set_ylabel(\"tilde_theta2\")\n"
       << "ax = ax1\n";
  } else if (figure == "control") {
    py << "fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax0.plot(d[\"t\"], d[\"u\"], label=label)\n"
       << "    ax1.plot(d[\"t\"], d[\"u\"] - d[\"u_star\"], label=label)\n"
       << "ax0.set_xlabel(\"t [s]\")\nax0.set_ylabel(\"u\")\n"
       << "ax0.legend()\nax0.grid(True, alpha=0.3)\n"
       << "ax1.set_xlabel(\"t [s]\")\nax1.set_ylabel(\"u - u_star\")\n"
       << "ax = ax1\n";
  } else {  // excitation
    py << "fig, ax = plt.subplots(figsize=(7, 4))\n"
       << "for label, rel in runs:\n"
       << "    d = load(rel)\n"
       << "    ax.plot(d[\"t_start\"], d[\"lambda_min\"], label=label)\n"
       << "ax.set_xlabel(\"window start [s]\")\nax.set_ylabel(\"lambda_min of Gram\")\n";
  }

  py << "ax.legend()\nax.grid(True, alpha=0.3)\n"
     << "out = os.path.join(base, " << py_str("fig_" + figure + ".png") << ")\n"
     << "fig.tight_layout()\nfig.savefig(out, dpi=150)\n"
     << "print(out)\n";

  std::ofstream out(out_py);
  if (!out) throw IoError("cannot open '" + out_py.string() + "' for writing");
  out << py.str();
  if (!out) throw IoError("write failed on '" + out_py.string() + "'");
}

}  // namespace afc
