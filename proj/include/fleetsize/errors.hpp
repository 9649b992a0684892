#pragma once

#include <stdexcept>
#include <string>

namespace fleetsize {

/// Malformed or inconsistent input (bad file, invalid design, out-of-range station).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sizing budget cannot be met within the search limits.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical or structural invariant was violated (mass drift, broken monotonicity).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The exact coupled state space exceeds the configured cap.
class StateSpaceTooLarge : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace fleetsize
