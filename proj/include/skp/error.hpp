#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied a value outside an operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable configuration input (vocab, CVT list, name map).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data is inconsistent with what an operation needs.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace skp
