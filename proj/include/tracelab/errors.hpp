#pragma once

#include <stdexcept>
#include <string>

namespace tracelab {

// Channel / config validation failure. The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative numerics that exhausted their step/retry budget. Exit code 3.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or serialization failure. Exit code 4.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tracelab
