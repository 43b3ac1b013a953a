#pragma once

#include <stdexcept>
#include <string>

namespace qvdp {

/// Invalid user-supplied configuration or parameters; carries the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A computation could not produce a trustworthy result (degenerate null space,
/// norm collapse, truncation leak, too many failed trajectories).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qvdp
