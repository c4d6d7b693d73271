#include "fimest/models/scalar_normal.hpp"

#include <cmath>

#include "fimest/errors.hpp"

namespace fimest {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

ScalarNormalModel::ScalarNormalModel(std::size_t n, Parameter parameter) : n_(n), parameter_(parameter) {
  if (n_ == 0) throw InvalidInput("scalar-normal: n must be at least 1");
}

std::string ScalarNormalModel::name() const {
  return parameter_ == Parameter::mean ? "scalar-normal" : "scalar-normal-variance";
}

double ScalarNormalModel::variance_of(const Vector& theta) const {
  if (parameter_ == Parameter::mean) return 1.0;
  if (!(theta(0) > 0.0)) throw InvalidInput("scalar-normal-variance: theta must be positive");
  return theta(0);
}

Dataset ScalarNormalModel::sample(const Vector& theta, Rng& rng) const {
  check_theta(theta);
  const double mean = parameter_ == Parameter::mean ? theta(0) : 0.0;
  const double sd = std::sqrt(variance_of(theta));
  Dataset data{Matrix(static_cast<Eigen::Index>(n_), 1)};
  for (std::size_t j = 0; j < n_; ++j) data.rows(static_cast<Eigen::Index>(j), 0) = mean + sd * rng.normal();
  return data;
}

double ScalarNormalModel::neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  const double z = data.rows(static_cast<Eigen::Index>(j), 0);
  if (parameter_ == Parameter::mean) return kHalfLog2Pi + 0.5 * (z - theta(0)) * (z - theta(0));
  const double v = variance_of(theta);
  return kHalfLog2Pi + 0.5 * std::log(v) + 0.5 * z * z / v;
}

Vector ScalarNormalModel::gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  const double z = data.rows(static_cast<Eigen::Index>(j), 0);
  Vector g(1);
  if (parameter_ == Parameter::mean) {
    g(0) = theta(0) - z;
  } else {
    const double v = variance_of(theta);
    g(0) = 0.5 / v - 0.5 * z * z / (v * v);
  }
  return g;
}

Matrix ScalarNormalModel::hessian(const Vector& theta, const Dataset& data) const {
  Matrix h(1, 1);
  if (parameter_ == Parameter::mean) {
    h(0, 0) = static_cast<double>(data.size());
    return h;
  }
  const double v = variance_of(theta);
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double z = data.rows(static_cast<Eigen::Index>(j), 0);
    total += -0.5 / (v * v) + z * z / (v * v * v);
  }
  h(0, 0) = total;
  return h;
}

std::optional<Matrix> ScalarNormalModel::true_fim(const Vector& theta) const {
  check_theta(theta);
  Matrix f(1, 1);
  const double v = variance_of(theta);
  f(0, 0) = parameter_ == Parameter::mean ? static_cast<double>(n_) : static_cast<double>(n_) / (2.0 * v * v);
  return f;
}

}  // namespace fimest
