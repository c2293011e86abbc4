#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace afc {

/// Uniformly sampled record of every closed-loop signal: one row per logged
/// step, one named column per signal. Serialized as CSV with a leading '#'
/// comment block echoing the scenario and seed.
struct TrajectoryLog {
  std::vector<std::string> names;
  Eigen::MatrixXd data;  ///< rows() samples x names.size() columns

  std::string scenario_echo;              ///< compact JSON, may be empty
  std::optional<std::uint64_t> seed{};

  Eigen::Index rows() const { return data.rows(); }
  bool has(std::string_view name) const { return col(name) >= 0; }
  int col(std::string_view name) const;          ///< -1 when absent
  int require_col(std::string_view name) const;  ///< throws ConfigError when absent
  Eigen::VectorXd column(std::string_view name) const;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

void write_trajectory_csv(const TrajectoryLog& log, std::ostream& os,
                          std::optional<double> diverged_at = {});
void write_trajectory_csv(const TrajectoryLog& log,
                          const std::filesystem::path& path,
                          std::optional<double> diverged_at = {});

TrajectoryLog read_trajectory_csv(const std::filesystem::path& path);

}  // namespace afc
