#pragma once

#include <stdexcept>
#include <string>

namespace hlc {

// Base for everything this library throws. The CLI maps the two branches
// below onto exit codes: input/config/parse -> 2, solver/sampler -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied values: malformed files, invalid bodies, inconsistent
// shapes, out-of-range parameters.
struct InputError : Error {
  using Error::Error;
};

struct ConfigError : InputError {
  using InputError::InputError;
};

struct ParseError : InputError {
  using InputError::InputError;
};

// Numeric failures: LP without a usable basis, Newton not converging,
// rejection sampler starving, singular covariance.
struct SolverError : Error {
  using Error::Error;
};

struct SamplerError : SolverError {
  using SolverError::SolverError;
};

}  // namespace hlc
