#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eseman {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed trace input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(line ? "line " + std::to_string(line) + ": " + reason : reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class BuildError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

// A write that does not fit in the store's fixed map size.
class CapacityError : public StoreError {
 public:
  CapacityError(std::uint64_t required, std::uint64_t map_size)
      : StoreError("node store map is full: " + std::to_string(required) +
                   " bytes required, map size is " + std::to_string(map_size)),
        required_(required),
        map_size_(map_size) {}

  std::uint64_t required() const { return required_; }
  std::uint64_t map_size() const { return map_size_; }

 private:
  std::uint64_t required_;
  std::uint64_t map_size_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class QueryError : public Error {
 public:
  enum class Kind { kInvalid, kUnknownDataset, kUnsupportedPredicate };

  QueryError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace eseman
