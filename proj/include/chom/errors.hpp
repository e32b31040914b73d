#pragma once

#include <stdexcept>
#include <string>

namespace chom {

/// Argument outside the domain of a graph, formula, or mesh.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An iterative method failed to reach its tolerance.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent or unsupported configuration.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace chom
