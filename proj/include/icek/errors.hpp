#pragma once

#include <stdexcept>
#include <string>

namespace icek {

// Malformed or contract-violating input. Maps to CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A solver or construction failed numerically. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not defined for the given model flavour (e.g. a transition
// operator on general dynamics).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace icek
