#pragma once

#include <stdexcept>
#include <string>

namespace markdev {

/// Invalid input data or configuration (CLI exit code 1).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure during computation (CLI exit code 2).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace markdev
