#include "fimest/models/quadratic.hpp"

#include "fimest/errors.hpp"

namespace fimest {

QuadraticModel::QuadraticModel(Matrix a) : QuadraticModel(a, Vector::Zero(a.rows()), 0.0) {}

QuadraticModel::QuadraticModel(Matrix a, Vector b, double offset)
    : a_(std::move(a)), b_(std::move(b)), offset_(offset) {
  if (a_.rows() == 0 || !is_symmetric(a_)) throw InvalidInput("quadratic: A must be a non-empty symmetric matrix");
  if (b_.size() != a_.rows()) throw InvalidInput("quadratic: b length does not match A");
  a_ = symmetrize(a_);
}

Dataset QuadraticModel::sample(const Vector& theta, Rng&) const {
  check_theta(theta);
  return Dataset{Matrix::Zero(1, 1)};
}

double QuadraticModel::neg_loglik(const Vector& theta, const Dataset&) const {
  return 0.5 * theta.dot(a_ * theta) + b_.dot(theta) + offset_;
}

Vector QuadraticModel::gradient(const Vector& theta, const Dataset&) const { return a_ * theta + b_; }

Matrix QuadraticModel::hessian(const Vector&, const Dataset&) const { return a_; }

std::optional<Matrix> QuadraticModel::true_fim(const Vector&) const { return a_; }

}  // namespace fimest
