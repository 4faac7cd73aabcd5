#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsl {

// Base for every numerical failure raised by the library. The CLI maps these
// to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the inputs did not hold (dimension mismatch, unnormalized
// state, non-increasing time grid, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Bures metric term dp^2/p with p == 0 but dp != 0.
class SingularEigenvalue : public Error {
 public:
  SingularEigenvalue(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Bloch equations evaluated at a pole with a nonvanishing drift term.
class PoleError : public Error {
 public:
  using Error::Error;
};

// Transit-time integrand became imaginary (classically forbidden region).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Requested time lies past the end of the decay-rate branch domain.
class DomainEndError : public Error {
 public:
  using Error::Error;
};

// Wavefunction density reached the edge of the spatial grid.
class GridTooSmall : public Error {
 public:
  using Error::Error;
};

// Adaptive integration could not meet its tolerance, or a propagated density
// matrix lost positivity.
class IntegrationToleranceError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsl
