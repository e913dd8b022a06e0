#pragma once

#include <stdexcept>
#include <string>

namespace magnav {

// Contract violations raised by the library. Soft conditions (out-of-domain
// field evaluation, singular innovation covariance) are reported as flags on
// the result instead of thrown.

struct NonPositiveHyperparameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownBlock : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GapTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleSpeed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonMonotoneTime : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingCalibration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace magnav
