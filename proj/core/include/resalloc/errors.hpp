#pragma once

#include <stdexcept>
#include <string>

namespace resalloc {

// Invalid configuration values (maps to CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition: wrong shapes, out-of-range action.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An operation was called in a state that does not allow it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite values in gradients, losses or Q outputs (exit code 2).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace resalloc
