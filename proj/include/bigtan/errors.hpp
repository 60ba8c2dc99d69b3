#pragma once

#include <stdexcept>
#include <string>

namespace bigtan {

// Base class for everything this library throws on its own behalf.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad call-site input: mismatched dimensions, mixed jet contexts, out-of-range
// indices, invalid construction parameters.
struct ArgumentError : Error {
    using Error::Error;
};

// Fiber argument sits on an excluded zero section (y = 0 or p = 0).
struct ZeroSectionError : Error {
    using Error::Error;
};

// Division by a jet whose value part vanishes, square root of a non-positive
// value part, and similar pointwise singularities in jet arithmetic.
struct SingularityError : Error {
    using Error::Error;
};

// Fundamental tensor is numerically singular or indefinite at the
// evaluation point (condition number guard tripped).
struct DegenerateMetricError : Error {
    using Error::Error;
};

// Newton solve failed to converge within the configured budget.
struct SolverError : Error {
    using Error::Error;
};

// Malformed run configuration (file or flags).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bigtan
