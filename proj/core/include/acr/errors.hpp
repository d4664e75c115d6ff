#pragma once

#include <stdexcept>
#include <string>

namespace acr {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numerical input.
class InvalidInputError : public Error {
public:
  using Error::Error;
};

/// Operands with incompatible dimensions or mismatched trees.
class ShapeMismatchError : public Error {
public:
  using Error::Error;
};

/// A diagonal block could not be inverted during elimination.
class SingularPivotError : public Error {
public:
  SingularPivotError(const std::string& what, int level, int block)
      : Error(what), level(level), block(block) {}
  int level = -1;  ///< cyclic reduction level, -1 if not inside a factorization
  int block = -1;  ///< block row index within the level
};

/// Krylov iteration breakdown (e.g. nonpositive curvature in CG).
class BreakdownError : public Error {
public:
  BreakdownError(const std::string& what, int iteration)
      : Error(what), iteration(iteration) {}
  int iteration = 0;
};

}  // namespace acr
