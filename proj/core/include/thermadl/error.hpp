#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace thermadl {

// Base for every error raised by the library. Callers that only need a
// message can catch std::runtime_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed frame CSV content. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A value or argument that breaks a documented precondition or invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Manifest validation collects every problem before throwing.
class ManifestError : public Error {
 public:
  ManifestError(const std::string& path, std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Model file problems: bad magic, unsupported version, corrupt content,
// or a feature dimension that does not match the model.
class ModelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermadl
