#pragma once

#include <stdexcept>
#include <string>

namespace lmpf {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: schema violations, invariant breaches, bad arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Network topology problems (islanding, singular susceptance matrix).
class TopologyError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class Unbounded : public Error {
 public:
  using Error::Error;
};

/// An active set whose rows are linearly dependent, or a basis that is not
/// dual feasible. Raised by the closed-form region constructions.
class Degenerate : public Error {
 public:
  using Error::Error;
};

class EmptyRegion : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Process exit code for an exception thrown out of a CLI command.
int exit_code_for(const std::exception& e);

}  // namespace lmpf
