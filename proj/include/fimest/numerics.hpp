#pragma once

#include <Eigen/Dense>

#include "fimest/rng.hpp"

namespace fimest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

/// True when |a(j,k) - a(k,j)| <= tol * max(1, |a(j,k)|) for every pair.
bool is_symmetric(const Matrix& a, double tol = 1e-12);

/// Largest singular value. Symmetric inputs go through the symmetric
/// eigen-solver directly; everything else through the eigenvalues of A^T A.
double spectral_norm(const Matrix& a);

/// (A + A^T) / 2. Throws InvalidInput for non-square input.
Matrix symmetrize(const Matrix& a);

/// Lower-triangular C with C C^T = S. Throws NotPositiveDefinite carrying the
/// index of the first pivot that is not strictly positive.
Matrix cholesky_factor(const Matrix& s);

/// Like cholesky_factor but tolerates positive semi-definite input: pivots at
/// or below a rounding-scale threshold produce a zero column. Used for sampling
/// from possibly degenerate covariances.
Matrix psd_factor(const Matrix& s);

/// One draw from N(mean, cov); returns mean exactly when cov is zero.
Vector mvn_sample(const Vector& mean, const Matrix& cov, Rng& rng);

/// Draw using a precomputed factor C (cov = C C^T).
Vector mvn_sample_factored(const Vector& mean, const Matrix& factor, Rng& rng);

}  // namespace fimest
