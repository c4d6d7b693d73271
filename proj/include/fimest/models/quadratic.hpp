#pragma once

#include "fimest/model.hpp"

namespace fimest {

/// Deterministic L(theta) = 1/2 theta^T A theta + b^T theta + offset.
///
/// Pseudo data are a single empty-valued row, so every estimator sees the same
/// L on every dataset and its FIM is exactly A. Not decomposable per datum.
class QuadraticModel final : public Model {
 public:
  explicit QuadraticModel(Matrix a);
  QuadraticModel(Matrix a, Vector b, double offset = 0.0);

  std::string name() const override { return "quadratic"; }
  std::size_t dim_theta() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t data_dim() const override { return 1; }
  std::size_t sample_size() const override { return 1; }

  Dataset sample(const Vector& theta, Rng& rng) const override;
  double neg_loglik(const Vector& theta, const Dataset& data) const override;

  bool has_gradient() const override { return true; }
  Vector gradient(const Vector& theta, const Dataset& data) const override;

  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta, const Dataset& data) const override;

  std::optional<Matrix> true_fim(const Vector& theta) const override;

  const Matrix& a() const { return a_; }

 private:
  Matrix a_;
  Vector b_;
  double offset_;
};

}  // namespace fimest
