#pragma once

#include <stdexcept>
#include <string>

namespace mound {

// Bad arguments, configs, or value ranges. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Broken or missing input data (files, malformed records). Exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed text record; carries the 1-based line number.
class ParseError : public DataError {
public:
  ParseError(const std::string& what, int line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

} // namespace mound
