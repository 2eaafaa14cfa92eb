#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scattomo {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Evaluation point coincides with a source or image singularity.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical stage produced something unusable (overflow, non-finite data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(std::size_t pivot, const std::string& stage = "lu_solve")
      : NumericalError(stage + ": singular matrix, zero pivot at index " +
                       std::to_string(pivot)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// A root-finding target lies outside the attainable range.
class NoSolutionError : public NumericalError {
 public:
  NoSolutionError(const std::string& what, double lo, double hi)
      : NumericalError(what), lo_(lo), hi_(hi) {}

  double attainable_min() const noexcept { return lo_; }
  double attainable_max() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// Malformed or inconsistent user configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scattomo
