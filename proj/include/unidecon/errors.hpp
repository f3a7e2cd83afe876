#pragma once

#include <stdexcept>
#include <string>

namespace unidecon {

// Invalid model parameters or configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent input data (files, samples).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature non-convergence, vanishing denominators and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when no observation exceeds 1, so m_n is undefined and the
// current-status solver applies.
class AllMassInUnitInterval : public DomainError {
 public:
  AllMassInUnitInterval() : DomainError("all mass in unit interval") {}
};

}  // namespace unidecon
