#pragma once

#include <stdexcept>
#include <string>

namespace dgcn {

/// Base class for all recoverable data/domain failures (CLI exit code 2).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file content (bad token, wrong field count, duplicates).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An index refers outside the declared shape (node id >= n, dim >= C).
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A value violates a mathematical precondition (negative weight, empty edge set).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The experimental protocol cannot be satisfied (not enough labels per class).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or was handed inconsistent state.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated; indicates a bug (CLI exit code 3).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace dgcn
