#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace palmkit {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural problems: mismatched block names, shapes, sizes.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration (bad ranges, unknown algorithm names, ...).
// Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Numerical failures: non-finite objective, failed factorizations, ...
// Maps to CLI exit code 3.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Cholesky hit a non-positive pivot; reports which one.
class NotPositiveDefiniteError : public NumericalError {
 public:
  NotPositiveDefiniteError(const std::string& msg, std::int64_t pivot)
      : NumericalError(msg + " (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::int64_t pivot() const { return pivot_; }

 private:
  std::int64_t pivot_;
};

// Orthogonal projection asked for a (numerically) rank-deficient matrix.
class SingularProjectionError : public NumericalError {
 public:
  explicit SingularProjectionError(const std::string& msg)
      : NumericalError(msg) {}
};

// Malformed input files; carries the byte offset of the first bad field.
// Maps to CLI exit code 4.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::uint64_t byte_offset)
      : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::uint64_t byte_offset() const { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

}  // namespace palmkit
