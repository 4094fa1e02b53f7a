#pragma once

#include <stdexcept>
#include <string>

namespace gridsync {

// Invalid parameters, malformed configs, inconsistent dimensions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration failures: voltage collapse, non-finite states or derivatives.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridsync
