#pragma once

#include <stdexcept>

namespace gmnorm {

// Input data violates a precondition: bad dimensions, non-finite entries,
// malformed files. The CLI maps this to exit code 2.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The (p, q) combination lies outside the region a method is valid for.
class unsupported_region : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Enumeration size would exceed the configured cap (q = 1 vertex solver).
class cap_exceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Grid oracle requested for an ambient dimension it does not support.
class dimension_too_large : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A map required to be surjective (numerically full row rank) is not.
class not_surjective : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solve stalled: tolerance not met within the iteration cap.
// The CLI maps this to exit code 3.
class numerical_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmnorm
