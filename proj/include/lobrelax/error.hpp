#pragma once

#include <stdexcept>
#include <string>

namespace lobrelax {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

/// Malformed or insufficient input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data: " + msg) {}
};

/// A numerical procedure left its regime of validity.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error("numerical: " + msg) {}
};

}  // namespace lobrelax
