#pragma once

#include <stdexcept>
#include <string>

namespace gme {

/// Base of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input bytes (PGM header, raster, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument does not hold (bad level count, bad mask margin, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid cost-function parameters, e.g. a Student-t with tau*nu <= 1/2.
class ParameterError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class SingularTransformError : public Error {
 public:
  using Error::Error;
};

/// The mask and the warp validity map have no pixel in common.
class DegenerateOverlapError : public Error {
 public:
  using Error::Error;
};

/// Damping escalation in the Newton step ran past its ceiling.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class AdaptationError : public Error {
 public:
  using Error::Error;
};

/// A synthetic scene description that cannot be rendered.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace gme
