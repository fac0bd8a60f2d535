#pragma once

#include <stdexcept>
#include <string>

namespace nqdyn {

// Exit codes used by the command line runner.
enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 2,
  exit_blowup = 3,
  exit_resource = 4,
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested allocation or basis size exceeds the configured budget.
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical blowup (NaN/Inf or norm beyond threshold) during evolution.
struct BlowupError : std::runtime_error {
  BlowupError(const std::string& msg, long step_index)
      : std::runtime_error(msg), step(step_index) {}
  long step;
};

}  // namespace nqdyn
