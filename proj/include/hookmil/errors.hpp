#pragma once

#include <stdexcept>
#include <string>

namespace hookmil {

// Contract violations (bad shapes, bad config values, bad labels).
// The CLI maps these to exit code 1.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Backward called with a tape that no longer matches the parameters.
struct SequencingError : std::logic_error {
    using std::logic_error::logic_error;
};

// File-format and I/O problems. The CLI maps these to exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : IoError {
    using IoError::IoError;
};

// Training aborted (NaN loss, empty dataset).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hookmil
