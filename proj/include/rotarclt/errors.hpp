#pragma once

#include <stdexcept>
#include <string>

namespace rotarclt {

/// Invalid family / index specification or parameter.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mathematically undefined request (missing moment, non-finite bound, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to deliver its contract. Carries whatever
/// partial value was available when it gave up.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double partial_value = 0.0, double partial_error = 0.0)
      : std::runtime_error(what), partial_value_(partial_value), partial_error_(partial_error) {}

  double partial_value() const noexcept { return partial_value_; }
  double partial_error() const noexcept { return partial_error_; }

 private:
  double partial_value_;
  double partial_error_;
};

}  // namespace rotarclt
