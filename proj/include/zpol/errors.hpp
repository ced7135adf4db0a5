#pragma once

#include <stdexcept>
#include <string>

namespace zpol {

/// Input outside the domain of a physical formula (negative temperature,
/// population inversion, out-of-range level index, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure (root polish, eigenvalue gate, optimizer) did not
/// reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zpol
