#pragma once

#include <stdexcept>

namespace margulis {

// Malformed input or a violated precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The certified error of the rational surrogate is too large for the
// requested index range. Raising the guard depth and retrying may help.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computed structure disagrees with its brute-force oracle.
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace margulis
