#include "fimest/models/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "fimest/errors.hpp"

namespace fimest {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr std::size_t kReplicationsPerBlock = 2048;

struct Components {
  // log(weight * phi_k(z)) for k = 1, 2 and the log density.
  double a1, a2, log_f;
  double w1, w2;  // posterior weights
  double dlambda; // d log f / d lambda = (phi1 - phi2) / f
};

Components components(const Vector& theta, double z) {
  const double lambda = theta(0), mu1 = theta(1), s1 = theta(2), mu2 = theta(3), s2 = theta(4);
  const double r1 = (z - mu1) / s1;
  const double r2 = (z - mu2) / s2;
  Components c;
  // Unweighted component log densities, up to the shared constant.
  const double b1 = -std::log(s1) - 0.5 * r1 * r1;
  const double b2 = -std::log(s2) - 0.5 * r2 * r2;
  c.a1 = std::log(lambda) - kHalfLog2Pi + b1;
  c.a2 = std::log1p(-lambda) - kHalfLog2Pi + b2;
  const double top = std::max(c.a1, c.a2);
  c.log_f = top + std::log(std::exp(c.a1 - top) + std::exp(c.a2 - top));
  c.w1 = std::exp(c.a1 - c.log_f);
  c.w2 = std::exp(c.a2 - c.log_f);
  // Identical components cancel exactly here.
  const double m = std::max(b1, b2);
  const double p1 = std::exp(b1 - m), p2 = std::exp(b2 - m);
  c.dlambda = (p1 - p2) / (lambda * p1 + (1.0 - lambda) * p2);
  return c;
}

// Gradients of a_k = log(pi_k phi_k) in theta coordinates.
using Vec5 = std::array<double, 5>;

void component_grads(const Vector& theta, double z, Vec5& g1, Vec5& g2) {
  const double lambda = theta(0), mu1 = theta(1), s1 = theta(2), mu2 = theta(3), s2 = theta(4);
  const double e1 = z - mu1, e2 = z - mu2;
  g1 = {1.0 / lambda, e1 / (s1 * s1), e1 * e1 / (s1 * s1 * s1) - 1.0 / s1, 0.0, 0.0};
  g2 = {-1.0 / (1.0 - lambda), 0.0, 0.0, e2 / (s2 * s2), e2 * e2 / (s2 * s2 * s2) - 1.0 / s2};
}

void require_finite(double v, const char* who) {
  if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": non-finite result");
}

}  // namespace

void mix_check_theta(const Vector& theta) {
  if (theta.size() != 5) throw InvalidInput("mixture: theta must have 5 entries [lambda, mu1, sigma1, mu2, sigma2]");
  if (!theta.allFinite()) throw InvalidInput("mixture: theta has non-finite entries");
  if (!(theta(0) > 0.0 && theta(0) < 1.0)) throw InvalidInput("mixture: lambda must lie in (0, 1)");
  if (!(theta(2) > 0.0) || !(theta(4) > 0.0)) throw InvalidInput("mixture: sigma1 and sigma2 must be positive");
}

double mix_log_density(double z, const Vector& theta) {
  mix_check_theta(theta);
  return components(theta, z).log_f;
}

double mix_density(double z, const Vector& theta) { return std::exp(mix_log_density(z, theta)); }

double mix_neg_loglik(const Vector& theta, double z) {
  const double v = -mix_log_density(z, theta);
  require_finite(v, "mix_neg_loglik");
  return v;
}

Vector mix_grad(const Vector& theta, double z) {
  mix_check_theta(theta);
  const Components c = components(theta, z);
  Vec5 g1, g2;
  component_grads(theta, z, g1, g2);
  Vector g(5);
  for (int a = 0; a < 5; ++a) g(a) = -(c.w1 * g1[a] + c.w2 * g2[a]);
  g(0) = -c.dlambda;
  if (!g.allFinite()) throw NumericalError("mix_grad: non-finite result");
  return g;
}

Matrix mix_hessian(const Vector& theta, double z) {
  mix_check_theta(theta);
  const Components c = components(theta, z);
  Vec5 g1, g2;
  component_grads(theta, z, g1, g2);
  const double lambda = theta(0), mu1 = theta(1), s1 = theta(2), mu2 = theta(3), s2 = theta(4);
  const double e1 = z - mu1, e2 = z - mu2;

  // Second derivatives of a_1 and a_2 (block structure, zero elsewhere).
  Matrix h1 = Matrix::Zero(5, 5), h2 = Matrix::Zero(5, 5);
  h1(0, 0) = -1.0 / (lambda * lambda);
  h1(1, 1) = -1.0 / (s1 * s1);
  h1(1, 2) = h1(2, 1) = -2.0 * e1 / (s1 * s1 * s1);
  h1(2, 2) = -3.0 * e1 * e1 / (s1 * s1 * s1 * s1) + 1.0 / (s1 * s1);
  h2(0, 0) = -1.0 / ((1.0 - lambda) * (1.0 - lambda));
  h2(3, 3) = -1.0 / (s2 * s2);
  h2(3, 4) = h2(4, 3) = -2.0 * e2 / (s2 * s2 * s2);
  h2(4, 4) = -3.0 * e2 * e2 / (s2 * s2 * s2 * s2) + 1.0 / (s2 * s2);

  // d2 log f = sum_k w_k (d2 a_k + d a_k d a_k^T) - d log f d log f^T; L = -log f.
  Vec5 gf;
  for (int a = 0; a < 5; ++a) gf[a] = c.w1 * g1[a] + c.w2 * g2[a];
  gf[0] = c.dlambda;
  Matrix h(5, 5);
  for (int a = 0; a < 5; ++a)
    for (int b = a; b < 5; ++b) {
      const double second = c.w1 * (h1(a, b) + g1[a] * g1[b]) + c.w2 * (h2(a, b) + g2[a] * g2[b]) - gf[a] * gf[b];
      h(a, b) = -second;
      h(b, a) = -second;
    }
  if (!h.allFinite()) throw NumericalError("mix_hessian: non-finite result");
  return h;
}

double mix_neg_loglik(const Vector& theta, const Dataset& data) {
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) total += mix_neg_loglik(theta, data.rows(static_cast<Eigen::Index>(j), 0));
  return total;
}

Vector mix_grad(const Vector& theta, const Dataset& data) {
  Vector g = Vector::Zero(5);
  for (std::size_t j = 0; j < data.size(); ++j) g += mix_grad(theta, data.rows(static_cast<Eigen::Index>(j), 0));
  return g;
}

Matrix mix_hessian(const Vector& theta, const Dataset& data) {
  Matrix h = Matrix::Zero(5, 5);
  for (std::size_t j = 0; j < data.size(); ++j) h += mix_hessian(theta, data.rows(static_cast<Eigen::Index>(j), 0));
  return h;
}

MixtureModel::MixtureModel(std::size_t n) : n_(n) {
  if (n_ == 0) throw InvalidInput("mixture: n must be at least 1");
}

Dataset MixtureModel::sample(const Vector& theta, Rng& rng) const {
  mix_check_theta(theta);
  Dataset data{Matrix(static_cast<Eigen::Index>(n_), 1)};
  for (std::size_t j = 0; j < n_; ++j) {
    const bool first = rng.uniform() < theta(0);
    const double mean = first ? theta(1) : theta(3);
    const double sd = first ? theta(2) : theta(4);
    data.rows(static_cast<Eigen::Index>(j), 0) = mean + sd * rng.normal();
  }
  return data;
}

double MixtureModel::neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  return mix_neg_loglik(theta, data.rows(static_cast<Eigen::Index>(j), 0));
}

Vector MixtureModel::gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  return mix_grad(theta, data.rows(static_cast<Eigen::Index>(j), 0));
}

Matrix MixtureModel::hessian(const Vector& theta, const Dataset& data) const { return mix_hessian(theta, data); }

Matrix mix_true_fim_approx(const Vector& theta, std::size_t n, std::size_t replications, std::uint64_t seed,
                           unsigned threads) {
  mix_check_theta(theta);
  if (n == 0 || replications == 0) throw InvalidInput("mix_true_fim_approx: n and R must be at least 1");
  const MixtureModel model(n);
  const std::size_t blocks = (replications + kReplicationsPerBlock - 1) / kReplicationsPerBlock;
  std::vector<Matrix> partial(blocks, Matrix::Zero(5, 5));

  auto run_block = [&](std::size_t b) {
    Rng rng = Rng::derive(seed, {label_key("mixture-oracle"), b});
    const std::size_t begin = b * kReplicationsPerBlock;
    const std::size_t end = std::min(replications, begin + kReplicationsPerBlock);
    Matrix sum = Matrix::Zero(5, 5);
    for (std::size_t r = begin; r < end; ++r) sum += mix_hessian(theta, model.sample(theta, rng));
    partial[b] = sum;
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < blocks; b += workers) run_block(b);
      });
    for (auto& t : pool) t.join();
  }

  Matrix total = Matrix::Zero(5, 5);
  for (const Matrix& m : partial) total += m;
  return symmetrize(total / static_cast<double>(replications));
}

Matrix mix_true_fim_approx(const Vector& theta, std::size_t n, std::size_t replications, Rng& rng,
                           unsigned threads) {
  return mix_true_fim_approx(theta, n, replications, rng.next_u64(), threads);
}

std::filesystem::path mix_cache_path(const Vector& theta, std::size_t n, std::size_t replications,
                                     std::uint64_t seed, const std::filesystem::path& cache_dir) {
  std::uint64_t h = label_key("mixture");
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    std::uint64_t bits;
    const double v = theta(j);
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  }
  char name[128];
  std::snprintf(name, sizeof name, "mixture-fim-n%zu-R%zu-seed%llu-%016llx.txt", n, replications,
                static_cast<unsigned long long>(seed), static_cast<unsigned long long>(h));
  return cache_dir / name;
}

void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << file.matrix.rows() << ' ' << file.replications << ' ' << file.seed << '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < file.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < file.matrix.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", file.matrix(r, c));
      out << (c == 0 ? "" : " ") << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  MatrixFile file;
  long long p = 0;
  if (!(in >> p >> file.replications >> file.seed) || p <= 0)
    throw IoError("'" + path.string() + "': malformed header, expected 'p R seed'");
  file.matrix.resize(p, p);
  for (long long r = 0; r < p; ++r)
    for (long long c = 0; c < p; ++c)
      if (!(in >> file.matrix(r, c))) throw IoError("'" + path.string() + "': truncated matrix body");
  return file;
}

Matrix mix_true_fim_cached(const Vector& theta, std::size_t n, std::size_t replications, std::uint64_t seed,
                           const std::filesystem::path& cache_dir, unsigned threads) {
  const std::filesystem::path path = mix_cache_path(theta, n, replications, seed, cache_dir);
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    const MatrixFile cached = read_matrix_file(path);
    if (cached.matrix.rows() == 5 && cached.replications == replications && cached.seed == seed)
      return cached.matrix;
  }
  const Matrix fim = mix_true_fim_approx(theta, n, replications, seed, threads);
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) throw IoError("cannot create cache directory '" + cache_dir.string() + "': " + ec.message());
  write_matrix_file(path, MatrixFile{fim, replications, seed});
  return fim;
}

}  // namespace fimest
