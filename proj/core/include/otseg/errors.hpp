#pragma once

#include <stdexcept>
#include <string>

namespace otseg {

// Process exit codes shared by all CLI subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidConfig = 2,
  kExitSolverFailure = 3,
  kExitIoFailure = 4,
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace otseg
