#pragma once

#include <stdexcept>
#include <string>

namespace dpp {

// Invalid user-supplied configuration or inputs. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint or data file that cannot be read back faithfully.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpp
