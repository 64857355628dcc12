#ifndef AUGSEARCH_ERRORS_HPP
#define AUGSEARCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace augsearch {

/// A configuration value failed validation. `field()` names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An experimental protocol could not produce a result (e.g. every trial diverged).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace augsearch

#endif  // AUGSEARCH_ERRORS_HPP
