#pragma once

#include <stdexcept>
#include <string>

namespace fwdcurve {

/// Structural misuse: curves living on different grids fed to a binary
/// operation, or an ensemble consumed by a routine it was not prepared for.
class ConfigMismatchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A point-wise coefficient was evaluated at a state outside its domain.
/// Carries the offending location so path diagnostics stay actionable.
class DomainViolationError : public std::runtime_error {
 public:
  DomainViolationError(const std::string& what, int node_index, double value)
      : std::runtime_error(what), node_index(node_index), value(value) {}
  int node_index;  // index of the offending node; n_nodes denotes the tail
  double value;
};

/// Result left the representable range (exponential overflow and friends).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Multiplication kernel is not sign-definite, so no inverse exists.
class InvertibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate statistical quantity (zero instantaneous volatility at the
/// requested maturity, for example).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested computation needs data the inputs do not carry.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cross-validation against the one-dimensional projection refused to run
/// because the discretization cannot represent the comparison faithfully.
class CouplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fwdcurve
