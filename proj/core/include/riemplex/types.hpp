#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace riemplex {

using index_t = std::int64_t;
using vec_t = Eigen::VectorXd;
using mat_t = Eigen::MatrixXd;

/// Sentinel for "no vertex" / unreachable targets.
constexpr index_t NO_VERTEX = std::numeric_limits<index_t>::max();

/// Marker used where the framework reports +infinity (condition numbers,
/// unreachable geodesic targets).
constexpr double INF_MARKER = std::numeric_limits<double>::infinity();

// ================================================================
// Error taxonomy
//
// input_error_t:    caller violated a precondition (unknown simplex,
//                   dimension mismatch, bad configuration).
// validation_error_t: parsed inputs fail schema/consistency checks.
// internal_error_t: an invariant that must hold by construction failed.
// ================================================================

struct input_error_t : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct validation_error_t : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct internal_error_t : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace riemplex
