#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "fimest/model.hpp"

namespace fimest {

/// Two-component univariate normal mixture,
/// theta = [lambda, mu1, sigma1, mu2, sigma2] with sigma the standard deviations.
/// Throws InvalidInput unless 0 < lambda < 1 and both sigmas are positive.
void mix_check_theta(const Vector& theta);

double mix_log_density(double z, const Vector& theta);
double mix_density(double z, const Vector& theta);

/// -log f(z; theta) and its closed-form gradient / Hessian for one observation.
double mix_neg_loglik(const Vector& theta, double z);
Vector mix_grad(const Vector& theta, double z);
Matrix mix_hessian(const Vector& theta, double z);

/// Sums over the rows of a dataset.
double mix_neg_loglik(const Vector& theta, const Dataset& data);
Vector mix_grad(const Vector& theta, const Dataset& data);
Matrix mix_hessian(const Vector& theta, const Dataset& data);

/// Average of mix_hessian over R independent datasets of size n drawn at theta.
/// Work is split into fixed blocks with their own derived streams, so the
/// result depends only on (theta, n, R, seed), not on `threads`.
Matrix mix_true_fim_approx(const Vector& theta, std::size_t n, std::size_t replications, std::uint64_t seed,
                           unsigned threads = 0);
Matrix mix_true_fim_approx(const Vector& theta, std::size_t n, std::size_t replications, Rng& rng,
                           unsigned threads = 0);

/// mix_true_fim_approx backed by a plain-text cache in `cache_dir`, keyed by
/// (theta, n, R, seed).
Matrix mix_true_fim_cached(const Vector& theta, std::size_t n, std::size_t replications, std::uint64_t seed,
                           const std::filesystem::path& cache_dir, unsigned threads = 0);
std::filesystem::path mix_cache_path(const Vector& theta, std::size_t n, std::size_t replications,
                                     std::uint64_t seed, const std::filesystem::path& cache_dir);

/// Cached-FIM file: header line "p R seed", then p rows of p values.
struct MatrixFile {
  Matrix matrix;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};
void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file);
MatrixFile read_matrix_file(const std::filesystem::path& path);

class MixtureModel final : public Model {
 public:
  explicit MixtureModel(std::size_t n);

  std::string name() const override { return "mixture"; }
  std::size_t dim_theta() const override { return 5; }
  std::size_t data_dim() const override { return 1; }
  std::size_t sample_size() const override { return n_; }

  Dataset sample(const Vector& theta, Rng& rng) const override;

  bool has_gradient() const override { return true; }
  bool has_per_datum() const override { return true; }
  double neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;
  Vector gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const override;

  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta, const Dataset& data) const override;

 private:
  std::size_t n_;
};

}  // namespace fimest
