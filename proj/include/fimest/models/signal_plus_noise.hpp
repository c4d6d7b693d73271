#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fimest/model.hpp"

namespace fimest {

/// (mu, Sigma) packed as theta = [mu; vech(Sigma)], where vech stacks the
/// lower triangle of Sigma column by column. Length d + d(d+1)/2.
Vector theta_pack(const Vector& mu, const Matrix& sigma);
std::pair<Vector, Matrix> theta_unpack(const Vector& theta, std::size_t d);
std::size_t spn_param_count(std::size_t d);

/// P_i = sqrt(i) U^T U for i = 1..n, with U a single d x d draw of i.i.d.
/// uniform(0, 1) entries.
std::vector<Matrix> build_noise_covariances(std::size_t d, std::size_t n, Rng& rng);

/// Signal-plus-noise model: z_i ~ N(mu, Sigma + P_i) independently, with the
/// noise covariances P_i known and theta = [mu; vech(Sigma)].
class SignalPlusNoiseModel final : public Model {
 public:
  /// Path key under which the noise draw U is derived from a study seed.
  static constexpr std::uint64_t kNoiseStream = 0x5350'4e5f'4e4f'4953ULL;

  SignalPlusNoiseModel(std::size_t d, std::vector<Matrix> noise);
  /// Noise covariances from build_noise_covariances on Rng::derive(seed, {kNoiseStream}).
  static SignalPlusNoiseModel with_random_noise(std::size_t d, std::size_t n, std::uint64_t seed);

  std::string name() const override { return "signal-plus-noise"; }
  std::size_t dim_theta() const override { return spn_param_count(d_); }
  std::size_t data_dim() const override { return d_; }
  std::size_t sample_size() const override { return noise_.size(); }

  Dataset sample(const Vector& theta, Rng& rng) const override;

  bool has_gradient() const override { return true; }
  bool has_per_datum() const override { return true; }
  double neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;
  Vector gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;

  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta, const Dataset& data) const override;
  Matrix hessian_datum(const Vector& theta, const Dataset& data, std::size_t j) const;

  std::optional<Matrix> true_fim(const Vector& theta) const override;

  std::size_t d() const { return d_; }
  const std::vector<Matrix>& noise() const { return noise_; }

 private:
  struct Terms;
  Terms terms(const Vector& theta, const Dataset* data, std::size_t j) const;

  std::size_t d_;
  std::vector<Matrix> noise_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> vech_index_;
};

}  // namespace fimest
