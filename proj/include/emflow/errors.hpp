#pragma once

#include <stdexcept>
#include <string>

namespace emflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the valid radial domain of a background (at or
/// below the horizon, below r_min, outside a table's range).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A flow engine stopped: H dropped to the floor, the profile lost its
/// graph property, or a conformal flow reached the boundary.
class FlowError : public Error {
 public:
  enum class Kind { SmoothnessLost, SelfIntersection, BoundaryReached };

  FlowError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// The enclosed region Omega cannot be formed for the requested homology.
class RegionError : public Error {
 public:
  using Error::Error;
};

/// A trace is too short (or too narrow in range) for the requested analysis.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// The background has no admissible photon sphere.
class NoPhotonSphere : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to a factory or operation (bad dimension, bad grid, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace emflow
