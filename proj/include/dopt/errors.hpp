#pragma once

#include <stdexcept>
#include <string>

namespace dopt {

/// Argument outside the mathematical domain of an operation (negative
/// coefficient, non-finite linear predictor, mu outside [0, 1/v_n], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shapes of matrices/vectors handed to an operation do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The problem is structurally degenerate for the requested solver
/// (objective identically zero, too many zero coefficients, ...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal numerical invariant was violated (negative discriminant,
/// bracketing failure). Signals an upstream precision problem.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Subset enumeration for the homogeneous-polynomial expansion was refused.
class ExpansionTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed user input (problem files, CLI flags). Carries a field path.
class InputError : public std::runtime_error {
 public:
  InputError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace dopt
