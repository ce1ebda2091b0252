#pragma once

#include <stdexcept>
#include <string>

namespace stokes {

// Parameter or precondition violations detected at call boundaries.
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Mismatched grid/array shapes.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Time step violates the integrator stability bound.
struct stability_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Too little data for a meaningful estimate (undefined g2, <10 trajectories, ...).
struct statistics_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Singular normal matrix: some parameter combination is unconstrained by the data.
struct degenerate_fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed configuration or table input.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace stokes
