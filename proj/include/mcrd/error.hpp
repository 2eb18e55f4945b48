#pragma once

#include <stdexcept>
#include <string>

namespace mcrd {

/// Input outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed (no bracket, quadrature cap, divergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested length is shorter than the smallest length the branch admits.
class LengthTooShort : public NumericalError {
 public:
  LengthTooShort(const std::string& what, double minimal)
      : NumericalError(what), minimal_length_(minimal) {}
  double minimal_length() const noexcept { return minimal_length_; }

 private:
  double minimal_length_;
};

}  // namespace mcrd
