#pragma once

#include "fimest/model.hpp"

namespace fimest {

/// n i.i.d. scalar normal observations with one unknown parameter.
///
///  - Parameter::mean:      z ~ N(theta, 1), FIM = n
///  - Parameter::variance:  z ~ N(0, theta), FIM = n / (2 theta^2)
///
/// The mean form has a data-independent Hessian, so simultaneous-perturbation
/// estimates of its FIM are exact; the variance form carries genuine
/// Monte Carlo error and is what the sqrt(N) consistency check uses.
class ScalarNormalModel final : public Model {
 public:
  enum class Parameter { mean, variance };

  explicit ScalarNormalModel(std::size_t n, Parameter parameter = Parameter::mean);

  std::string name() const override;
  std::size_t dim_theta() const override { return 1; }
  std::size_t data_dim() const override { return 1; }
  std::size_t sample_size() const override { return n_; }

  Dataset sample(const Vector& theta, Rng& rng) const override;

  bool has_gradient() const override { return true; }
  bool has_per_datum() const override { return true; }
  double neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;
  Vector gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;

  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta, const Dataset& data) const override;

  std::optional<Matrix> true_fim(const Vector& theta) const override;

  Parameter parameter() const { return parameter_; }

 private:
  double variance_of(const Vector& theta) const;

  std::size_t n_;
  Parameter parameter_;
};

}  // namespace fimest
