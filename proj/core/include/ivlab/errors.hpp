#pragma once

#include <stdexcept>
#include <string>

namespace ivlab {

// Invalid configuration: bad distribution parameters, inconsistent policy
// knobs, malformed population specs.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instrument carries no in-sample signal: sum_i (x_i - xbar)(z_i - zbar) == 0.
struct WeakInstrumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regressor is constant in-sample (OLS denominator vanishes).
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The k x k recommendation/action interaction matrix is singular.
struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exploration-probability ceiling requested for a type whose prior mean is
// not negative; the incentivization direction is inverted for such types.
struct NotNeverTakerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// First stage ended without the required number of control or treatment
// observations.
struct InsufficientFirstStageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures when emitting artifacts.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ivlab
