#pragma once

#include <stdexcept>
#include <string>

namespace chainlab {

// Bad caller input: wrong dimensions, out-of-range parameters, malformed specs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An API was used out of order, e.g. adapting a frozen tuning state.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Failures that only show up while running: unusable initial points,
// unwritable output paths, corrupt draw files.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chainlab
