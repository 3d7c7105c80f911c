#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drlir {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unknown user/item id or missing embedding row.
class LookupError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version or truncated payload in one of the binary artifacts.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A loss or parameter became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace drlir
