#pragma once

#include <stdexcept>
#include <string>

namespace streamfuse {

/// Invalid configuration: bad grid spec, channel mismatch, cyclic stage graph...
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (files, scene contents). Exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace streamfuse
