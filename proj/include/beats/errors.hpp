#pragma once

#include <stdexcept>
#include <string>

namespace beats {

// Shape/width disagreement between operands. Messages name both shapes.
class DimError : public std::runtime_error {
 public:
  explicit DimError(const std::string& msg) : std::runtime_error(msg) {}
};

// Out-of-range index (class label, vocabulary id, ...).
class IndexError : public std::runtime_error {
 public:
  explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or argument values, detected before any work starts.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or numerical breakdown at runtime.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File format / filesystem failures. Messages name the offending path or field.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace beats
