#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dualkg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `location()` is a 1-based line number for triple
/// files and a 0-based character offset for query text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

// Graph-side execution over a predicate that is not resident.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class TempTableError : public Error {
 public:
  using Error::Error;
};

class StateFormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualkg
