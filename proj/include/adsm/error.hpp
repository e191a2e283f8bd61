#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adsm {

/// Base class for all recoverable errors raised by the library.
/// The CLI maps these to exit code 2 (data/validation error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line or field; carries a 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Duplicate identifier where uniqueness is required.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// An identifier does not resolve against the corpus.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// An invariant on loaded or derived data does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact is corrupt, truncated, or version-mismatched.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Not enough data for the requested computation (e.g. rows < k).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A clip has no usable tags in a context that requires them.
class NoTagsError : public Error {
 public:
  using Error::Error;
};

/// Audio file cannot be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace adsm
