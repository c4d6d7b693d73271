#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "fimest/numerics.hpp"
#include "fimest/rng.hpp"

namespace fimest {

/// A realization Z = [z_1 ... z_n]^T: one row per data vector.
struct Dataset {
  Matrix rows;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
  Vector row(std::size_t j) const { return rows.row(static_cast<Eigen::Index>(j)).transpose(); }
};

/// Pluggable statistical model evaluated through its negative log-likelihood
/// L(theta | Z) = -log p(Z | theta).
///
/// Only `neg_loglik` and `sample` are mandatory. Gradient, per-datum access,
/// Hessian and the exact FIM are optional capabilities advertised through the
/// `has_*` queries; calling a missing capability throws CapabilityError.
///
/// Implementations must be immutable after construction: every member is a
/// pure function of its arguments and safe to call concurrently.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  /// p, the length of theta.
  virtual std::size_t dim_theta() const = 0;
  virtual std::size_t data_dim() const = 0;
  /// n, data vectors per pseudo dataset.
  virtual std::size_t sample_size() const = 0;

  virtual Dataset sample(const Vector& theta, Rng& rng) const = 0;
  virtual double neg_loglik(const Vector& theta, const Dataset& data) const;

  virtual bool has_gradient() const { return false; }
  virtual Vector gradient(const Vector& theta, const Dataset& data) const;

  /// Per-datum terms L_j with L = sum_j L_j, for mutually independent rows.
  virtual bool has_per_datum() const { return false; }
  virtual double neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const;
  virtual Vector gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const;

  virtual bool has_hessian() const { return false; }
  virtual Matrix hessian(const Vector& theta, const Dataset& data) const;

  /// Closed-form Fisher information, when one exists.
  virtual std::optional<Matrix> true_fim(const Vector& theta) const;

  void check_theta(const Vector& theta) const;
};

}  // namespace fimest
