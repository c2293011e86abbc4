#pragma once

#include <stdexcept>
#include <string>

namespace afc {

/// Invalid configuration: bad scenario fields, infeasible gain requests,
/// mismatched plant/observer pairings. Maps to exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (unreadable input, unwritable output).
/// Maps to exit code 4 in the CLI.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace afc
