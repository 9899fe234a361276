#pragma once

#include <stdexcept>
#include <string>

namespace atmp {

// Error taxonomy mirrors the process exit codes: config -> 2, numeric -> 3, io -> 4.
// Everything else (including std::invalid_argument from misuse) maps to the
// generic failure code at the C boundary.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace atmp
