#pragma once

#include <stdexcept>
#include <string>

namespace forge {

/// Base class for all forge errors. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid values, broken invariants, bad config. Exit code 2.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Malformed input text. Carries the byte offset (or line number) where
/// parsing failed; -1 when unknown.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, long offset = -1)
      : Error(offset >= 0 ? msg + " (at offset " + std::to_string(offset) + ")" : msg),
        offset_(offset) {}

  long offset() const { return offset_; }

private:
  long offset_;
};

/// A pipeline stage was asked to run before its input artifact exists.
/// Exit code 3.
class DependencyError : public Error {
public:
  explicit DependencyError(const std::string& msg) : Error(msg) {}
};

/// Filesystem or stream failure. Exit code 4.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Random placement search exhausted its retry budget.
class PlanningError : public Error {
public:
  explicit PlanningError(const std::string& msg) : Error(msg) {}
};

}  // namespace forge
