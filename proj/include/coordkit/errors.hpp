#pragma once

#include <stdexcept>
#include <string>

namespace coordkit {

/// Malformed or inconsistent problem data: bad axis names, dimension
/// mismatches, tables that are not probability distributions.
class InstanceFormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Options or simulator settings outside their documented domain.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar argument outside the domain of a closed-form expression.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A coding construction whose rate inequalities cannot be met.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coordkit
