#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace afc {

/// One run's files as a plot input.
struct PlotRun {
  std::string label;
  std::filesystem::path log_csv;
  std::optional<std::filesystem::path> excitation_csv{};
};

/// Known figure names: tracking, tracking_error, observer_error,
/// parameter_errors, control, excitation.
const std::vector<std::string>& plot_figures();

/// Figures applicable to a log with the given columns.
std::vector<std::string> applicable_figures(
    const std::vector<std::string>& columns, bool has_excitation);

/// Write a self-contained matplotlib script rendering one figure from the
/// given runs. CSV paths are embedded relative to the script's directory.
/// Throws ConfigError when a run's log lacks a required column.
void emit_plot_script(const std::string& figure,
                      const std::vector<PlotRun>& runs,
                      const std::filesystem::path& out_py);

}  // namespace afc
