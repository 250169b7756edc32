#pragma once

#include <stdexcept>
#include <string>

namespace pnrhbt {

/// Invalid parameter or configuration value (outside the model's domain).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative numeric routine failed to meet its stopping rule.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough counts (or signal) to form the requested estimate.
class InsufficientStatsError : public std::runtime_error {
 public:
  explicit InsufficientStatsError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem read/write failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pnrhbt
