#pragma once

#include <stdexcept>
#include <string>

namespace rexnet {

// Bad input data: malformed lines, unreadable files, schema violations.
// The CLI maps these to exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime failures during optimization (divergence, non-finite loss).
// The CLI maps these to exit code 1.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rexnet
