#pragma once

#include <stdexcept>
#include <string>

namespace amid {

// Base class for recoverable precondition and domain failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two vectors that must share a length do not.
class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// An argument falls outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Every log weight is -inf, so no distribution can be formed.
class AllZero : public Error {
 public:
  using Error::Error;
};

// A grid does not capture enough probability mass to discretize on.
class InsufficientCoverage : public Error {
 public:
  using Error::Error;
};

// Two grids that must coincide (range and resolution) do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

// A mixture whose entries are all zero; no valid distribution exists.
class EmptySupport : public Error {
 public:
  using Error::Error;
};

// Divergence parameters outside the supported region (a, b, a+b all nonzero).
class DegenerateParams : public Error {
 public:
  using Error::Error;
};

// The mixture weight w has no well-defined value at an index. This happens
// where both inputs are hard zeros, and at alpha = 1 where exactly one input
// is a hard zero (the two one-sided limits in alpha disagree there).
class IndeterminateWeight : public Error {
 public:
  using Error::Error;
};

// A loss evaluation inside a finite-difference stencil was not finite.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace amid
