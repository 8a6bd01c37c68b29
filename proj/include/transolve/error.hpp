#pragma once

#include <stdexcept>
#include <string>

namespace transolve {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or infeasible input data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between operands.
class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// A numerical kernel could not produce a usable answer.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace transolve
