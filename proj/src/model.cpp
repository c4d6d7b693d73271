#include "fimest/model.hpp"

#include "fimest/errors.hpp"

namespace fimest {

double Model::neg_loglik(const Vector& theta, const Dataset& data) const {
  if (!has_per_datum()) throw CapabilityError(name() + ": neg_loglik not implemented");
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) total += neg_loglik_datum(theta, data, j);
  return total;
}

Vector Model::gradient(const Vector& theta, const Dataset& data) const {
  if (!has_gradient()) throw CapabilityError(name() + ": model does not provide a gradient");
  if (!has_per_datum()) throw CapabilityError(name() + ": gradient not implemented");
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim_theta()));
  for (std::size_t j = 0; j < data.size(); ++j) g += gradient_datum(theta, data, j);
  return g;
}

double Model::neg_loglik_datum(const Vector&, const Dataset&, std::size_t) const {
  throw CapabilityError(name() + ": model does not provide per-datum likelihood terms");
}

Vector Model::gradient_datum(const Vector&, const Dataset&, std::size_t) const {
  throw CapabilityError(name() + ": model does not provide per-datum gradients");
}

Matrix Model::hessian(const Vector&, const Dataset&) const {
  throw CapabilityError(name() + ": model does not provide an analytic Hessian");
}

std::optional<Matrix> Model::true_fim(const Vector&) const { return std::nullopt; }

void Model::check_theta(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_theta())
    throw InvalidInput(name() + ": theta has length " + std::to_string(theta.size()) + ", expected " +
                       std::to_string(dim_theta()));
  if (!theta.allFinite()) throw InvalidInput(name() + ": theta has non-finite entries");
}

}  // namespace fimest
