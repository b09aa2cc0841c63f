#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gibbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain an operation accepts (e.g. unordered cutpoints).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A forward model or loss produced a non-finite value. Carries the offending parameter.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> theta)
      : Error(what), theta_(std::move(theta)) {}
  const std::vector<double>& theta() const noexcept { return theta_; }

 private:
  std::vector<double> theta_;
};

/// Data carry no usable spread (e.g. zero variance at every grid point).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters, option values or mismatched inputs.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Importance weights collapsed while moving between two tempering weights.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::size_t step, double from_w, double to_w)
      : Error(what), step_(step), from_w_(from_w), to_w_(to_w) {}
  std::size_t step() const noexcept { return step_; }
  double from_w() const noexcept { return from_w_; }
  double to_w() const noexcept { return to_w_; }

 private:
  std::size_t step_;
  double from_w_;
  double to_w_;
};

/// exp(-L) is not integrable against the chosen reference measure.
class UnsupportedLossError : public Error {
 public:
  using Error::Error;
};

/// A quadrature grid leaves too much prior mass uncovered.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint does not belong to the dataset it is being used with.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace gibbs
