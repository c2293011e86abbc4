#pragma once

#include <filesystem>
#include <string>

#include "afc/excitation.hpp"
#include "afc/scenario.hpp"
#include "afc/trajectory_log.hpp"

namespace afc {

/// Execute a scenario: fan out over the k1 sweep and initial-condition draws
/// on a bounded worker pool, write one directory per run (log.csv,
/// metrics.json, optional excitation.csv), then the comparison metrics, plot
/// scripts and a manifest listing every output with its content hash.
///
/// Returns 0 on success or 3 when any run diverged (its partial log is
/// flushed with a trailer naming the failure time). Configuration problems
/// throw ConfigError, filesystem problems IoError.
int run_scenario(const Scenario& s, const std::filesystem::path& out_root,
                 int jobs = 1);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// Run one excitation analysis over a log's (t, hat_x2) columns.
ExcitationReport analyze_log(const TrajectoryLog& log, const ExcitationSpec& spec,
                             double vartheta);

/// Report CSV: index, t_start, t_end, lambda_min, term, partial_sum, with the
/// mode parameters and verdict in a leading '#' block.
void write_excitation_csv(const ExcitationReport& rep, const ExcitationSpec& spec,
                          const std::filesystem::path& path);

}  // namespace afc
