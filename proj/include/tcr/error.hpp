#pragma once

#include <stdexcept>

namespace tcr {

// Invalid tensor/grid shapes, mismatched dimensions, bad arguments.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// File format and filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN gradients, diverging optimization, degenerate numerics.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Geometric precondition failures (non-watertight mesh, point behind camera, ...).
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration or CLI usage.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace tcr
