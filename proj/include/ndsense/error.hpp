#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ndsense {

/// Invalid configuration, arguments or input data. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// An orbit frame without any photons: the tracker has lost the emitter.
class NoSignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular geometry or information matrix.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ndsense
