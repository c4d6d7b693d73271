#include "fimest/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fimest/errors.hpp"

namespace fimest {

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    for (Eigen::Index k = j + 1; k < a.cols(); ++k)
      if (std::abs(a(j, k) - a(k, j)) > tol * std::max(1.0, std::abs(a(j, k)))) return false;
  return true;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) throw InvalidInput("spectral_norm: empty matrix");
  if (!a.allFinite()) throw InvalidInput("spectral_norm: matrix has non-finite entries");
  if (a.rows() == a.cols() && is_symmetric(a, 0.0)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  // A^T A and A A^T share their nonzero spectrum; take the smaller Gram matrix.
  Matrix gram = a.rows() >= a.cols() ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Matrix symmetrize(const Matrix& a) {
  if (a.rows() != a.cols())
    throw InvalidInput("symmetrize: matrix is " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + ", expected square");
  return 0.5 * (a + a.transpose());
}

namespace {

void require_square(const Matrix& s, const char* who) {
  if (s.rows() != s.cols() || s.rows() == 0)
    throw InvalidInput(std::string(who) + ": expected a non-empty square matrix");
  if (!s.allFinite()) throw InvalidInput(std::string(who) + ": matrix has non-finite entries");
}

// Column-oriented Cholesky on the lower triangle. `floor` is the pivot value at
// or below which a column is treated as rank deficient (strict mode: any
// pivot <= 0 fails).
Matrix factor_lower(const Matrix& s, bool allow_semidefinite) {
  const Eigen::Index n = s.rows();
  Matrix c = Matrix::Zero(n, n);
  const double scale = s.diagonal().cwiseAbs().maxCoeff();
  const double floor = allow_semidefinite ? 64.0 * n * std::numeric_limits<double>::epsilon() * scale : 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= c(j, k) * c(j, k);
    if (pivot <= floor) {
      if (allow_semidefinite && pivot >= -floor) continue;  // zero column
      throw NotPositiveDefinite("matrix is not positive definite: pivot " + std::to_string(j) + " is " +
                                    std::to_string(pivot),
                                static_cast<std::size_t>(j));
    }
    const double d = std::sqrt(pivot);
    c(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= c(i, k) * c(j, k);
      c(i, j) = v / d;
    }
  }
  return c;
}

}  // namespace

Matrix cholesky_factor(const Matrix& s) {
  require_square(s, "cholesky_factor");
  return factor_lower(s, false);
}

Matrix psd_factor(const Matrix& s) {
  require_square(s, "psd_factor");
  return factor_lower(s, true);
}

Vector mvn_sample_factored(const Vector& mean, const Matrix& factor, Rng& rng) {
  if (factor.rows() != mean.size() || factor.cols() != mean.size())
    throw InvalidInput("mvn_sample: covariance order " + std::to_string(factor.rows()) +
                       " does not match mean length " + std::to_string(mean.size()));
  Vector w(mean.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = rng.normal();
  return mean + factor.triangularView<Eigen::Lower>() * w;
}

Vector mvn_sample(const Vector& mean, const Matrix& cov, Rng& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw InvalidInput("mvn_sample: covariance order " + std::to_string(cov.rows()) +
                       " does not match mean length " + std::to_string(mean.size()));
  return mvn_sample_factored(mean, psd_factor(cov), rng);
}

}  // namespace fimest
