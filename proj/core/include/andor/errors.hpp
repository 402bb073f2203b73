#pragma once

#include <stdexcept>
#include <string>

namespace andor {

// Invalid formula/domain/run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-domain input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation was refused because it would exceed a configured budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss or parameters).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace andor
