#pragma once

#include <stdexcept>

namespace penbias {

// Numerical integration failed to reach the requested tolerance, or the
// integrand was flagged as non-integrable over [0, inf).
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed sample files or splits that leave a required subset empty.
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model files with the wrong schema, version, or inconsistent shapes.
struct SerializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, empty train/validation set).
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace penbias
