#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fimest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: shape mismatch, non-finite entries, zero perturbation entries.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A Cholesky pivot was not strictly positive. `pivot()` is the zero-based column.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// The model does not offer what the estimator asked for (gradient, per-datum terms, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fimest
