#pragma once

#include <stdexcept>
#include <string>

namespace mlfx {

// Base for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input, config, or dimension mismatch. CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Numeric failure: divergence, NaN/Inf, singular system. CLI exit code 3.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// File-level failure: unreadable, truncated, checksum mismatch.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace mlfx
