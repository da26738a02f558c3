#ifndef SICAOI_ERROR_HPP
#define SICAOI_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sicaoi {

// Configuration file problems. line() is 0 when the error is not tied to a
// particular line (e.g. a cross-field validation failure).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The analytic model reached a state its equations cannot represent
// (no fixed-point bracket, negative mean time, ...).
class ModelInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A SIC profile was queried outside the gamma range it was estimated on.
class InterpolationRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Artifact could not be read, or does not match the configuration it is
// being used with.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sicaoi

#endif  // SICAOI_ERROR_HPP
