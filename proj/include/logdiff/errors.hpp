// Exception types for the logdiff library.
#pragma once

#include <stdexcept>
#include <string>

namespace logdiff {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid grid construction or mismatched grids between profiles.
class GridError : public Error {
 public:
  using Error::Error;
};

// A radial integral whose far-field tail does not converge for the given
// dimension (e.g. a bare c/(k+r^2) tail for N >= 3).
class DivergentTailError : public Error {
 public:
  using Error::Error;
};

// Tail contribution of a difference could not be certified negligible
// (weighted integrals for N >= 4, differences of distinct Barenblatt tails).
class TailCertificateError : public Error {
 public:
  using Error::Error;
};

// A profile that must be positive has a non-positive (or sub-floor) node.
class PositivityError : public Error {
 public:
  using Error::Error;
};

// Newton iteration failed to converge, including after step halving.
class NewtonError : public Error {
 public:
  using Error::Error;
};

// Frozen coefficient violates the quadratic growth bounds of the linear
// difference equation.
class CoefficientBoundError : public Error {
 public:
  using Error::Error;
};

// Operation applied in the wrong frame (physical vs self-similar) or with an
// invalid time for the frame.
class FrameError : public Error {
 public:
  using Error::Error;
};

// Root bracket does not straddle a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (parse or validation).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A monitor declared a fatal invariant violation during an evolution.
class MonitorViolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace logdiff
