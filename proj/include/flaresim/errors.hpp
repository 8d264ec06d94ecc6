#pragma once

#include <stdexcept>
#include <string>

namespace flaresim {

// Bad input: malformed files, inconsistent configuration, out-of-range values.
// The CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken run-time invariant (event scheduled in the past, lost request, ...).
// These indicate a bug, not bad input; the CLI maps them to exit code 2.
struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flaresim
