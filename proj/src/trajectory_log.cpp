#include "afc/trajectory_log.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "afc/errors.hpp"

namespace afc {

int TrajectoryLog::col(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int TrajectoryLog::require_col(std::string_view name) const {
  const int i = col(name);
  if (i < 0) throw ConfigError("log has no column '" + std::string(name) + "'");
  return i;
}

Eigen::VectorXd TrajectoryLog::column(std::string_view name) const {
  return data.col(require_col(name));
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_trajectory_csv(const TrajectoryLog& log, std::ostream& os,
                          std::optional<double> diverged_at) {
  os << "# trajectory log\n";
  if (!log.scenario_echo.empty()) os << "# scenario: " << log.scenario_echo << '\n';
  if (log.seed) os << "# seed: " << *log.seed << '\n';
  for (std::size_t i = 0; i < log.names.size(); ++i) {
    os << (i ? "," : "") << log.names[i];
  }
  os << '\n';
  for (Eigen::Index r = 0; r < log.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < log.data.cols(); ++c) {
      os << (c ? "," : "") << format_double(log.data(r, c));
    }
    os << '\n';
  }
  if (diverged_at) os << "# DIVERGED at t=" << format_double(*diverged_at) << '\n';
}

void write_trajectory_csv(const TrajectoryLog& log,
                          const std::filesystem::path& path,
                          std::optional<double> diverged_at) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_trajectory_csv(log, out, diverged_at);
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

namespace {

double parse_double(std::string_view field, const std::filesystem::path& path) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (!field.empty() && field.front() == '+') ++first;  // from_chars rejects '+'
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw IoError("bad number '" + std::string(field) + "' in " + path.string());
  }
  return v;
}

}  // namespace

TrajectoryLog read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  TrajectoryLog log;
  std::string line;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kScenario = "# scenario: ";
      constexpr std::string_view kSeed = "# seed: ";
      if (line.rfind(kScenario, 0) == 0) {
        log.scenario_echo = line.substr(kScenario.size());
      } else if (line.rfind(kSeed, 0) == 0) {
        log.seed = std::stoull(line.substr(kSeed.size()));
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto pos = rest.find(',');
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (!header_seen) {
      for (const auto f : fields) log.names.emplace_back(f);
      header_seen = true;
      continue;
    }
    if (fields.size() != log.names.size()) {
      throw IoError("ragged row in " + path.string());
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[i] = parse_double(fields[i], path);
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw IoError("no header row in " + path.string());

  log.data.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(log.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      log.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return log;
}

}  // namespace afc
