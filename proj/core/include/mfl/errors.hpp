#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

/// Malformed or unusable input data: files, schemas, class balance,
/// corrupted model artifacts.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration (flag values, search spaces, method sets).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfl
