#pragma once

#include <stdexcept>
#include <string>

namespace mbc {

/// Bad user configuration (CLI flags, config file, invalid parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (trace files, trajectories).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown, e.g. a Gram matrix that stays indefinite after jitter.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mbc
