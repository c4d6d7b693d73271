#include "fimest/models/signal_plus_noise.hpp"

#include <cmath>
#include <string>

#include "fimest/errors.hpp"

namespace fimest {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

std::vector<std::pair<Eigen::Index, Eigen::Index>> vech_pairs(std::size_t d) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k)
    for (Eigen::Index j = k; j < static_cast<Eigen::Index>(d); ++j) pairs.emplace_back(j, k);
  return pairs;
}

// tr(W E_a W E_b) for symmetric single-entry basis matrices E_a, E_b.
double trace_basis(const Matrix& w, std::pair<Eigen::Index, Eigen::Index> a, std::pair<Eigen::Index, Eigen::Index> b) {
  // E = sum over (x, y) in S of e_x e_y^T; tr(W e_x e_y^T W e_l e_m^T) = W(m, x) W(y, l).
  auto entries = [](std::pair<Eigen::Index, Eigen::Index> e, std::pair<Eigen::Index, Eigen::Index> out[2]) {
    out[0] = e;
    out[1] = {e.second, e.first};
    return e.first == e.second ? 1 : 2;
  };
  std::pair<Eigen::Index, Eigen::Index> sa[2], sb[2];
  const int na = entries(a, sa);
  const int nb = entries(b, sb);
  double total = 0.0;
  for (int s = 0; s < na; ++s)
    for (int t = 0; t < nb; ++t) total += w(sb[t].second, sa[s].first) * w(sa[s].second, sb[t].first);
  return total;
}

}  // namespace

std::size_t spn_param_count(std::size_t d) { return d + d * (d + 1) / 2; }

Vector theta_pack(const Vector& mu, const Matrix& sigma) {
  const auto d = static_cast<std::size_t>(mu.size());
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size())
    throw InvalidInput("theta_pack: Sigma must be " + std::to_string(d) + "x" + std::to_string(d));
  if (!is_symmetric(sigma)) throw InvalidInput("theta_pack: Sigma must be symmetric");
  Vector theta(static_cast<Eigen::Index>(spn_param_count(d)));
  theta.head(mu.size()) = mu;
  Eigen::Index at = mu.size();
  for (const auto& [j, k] : vech_pairs(d)) theta(at++) = sigma(j, k);
  return theta;
}

std::pair<Vector, Matrix> theta_unpack(const Vector& theta, std::size_t d) {
  if (d == 0 || static_cast<std::size_t>(theta.size()) != spn_param_count(d))
    throw InvalidInput("theta_unpack: theta has length " + std::to_string(theta.size()) + ", expected " +
                       std::to_string(spn_param_count(d)) + " for d = " + std::to_string(d));
  const auto di = static_cast<Eigen::Index>(d);
  Vector mu = theta.head(di);
  Matrix sigma(di, di);
  Eigen::Index at = di;
  for (const auto& [j, k] : vech_pairs(d)) {
    sigma(j, k) = theta(at);
    sigma(k, j) = theta(at);
    ++at;
  }
  return {std::move(mu), std::move(sigma)};
}

std::vector<Matrix> build_noise_covariances(std::size_t d, std::size_t n, Rng& rng) {
  if (d == 0 || n == 0) throw InvalidInput("build_noise_covariances: d and n must be at least 1");
  const auto di = static_cast<Eigen::Index>(d);
  Matrix u(di, di);
  for (Eigen::Index r = 0; r < di; ++r)
    for (Eigen::Index c = 0; c < di; ++c) u(r, c) = rng.uniform();
  const Matrix gram = u.transpose() * u;
  std::vector<Matrix> noise;
  noise.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) noise.push_back(std::sqrt(static_cast<double>(i)) * gram);
  return noise;
}

struct SignalPlusNoiseModel::Terms {
  Matrix w;         // (Sigma + P_j)^-1
  Vector u;         // w (z_j - mu)
  double logdet = 0.0;
  double quad = 0.0;
};

SignalPlusNoiseModel::SignalPlusNoiseModel(std::size_t d, std::vector<Matrix> noise)
    : d_(d), noise_(std::move(noise)), vech_index_(vech_pairs(d)) {
  if (d_ == 0) throw InvalidInput("signal-plus-noise: d must be at least 1");
  if (noise_.empty()) throw InvalidInput("signal-plus-noise: need at least one noise covariance");
  for (std::size_t i = 0; i < noise_.size(); ++i) {
    const Matrix& p = noise_[i];
    if (p.rows() != static_cast<Eigen::Index>(d_) || p.cols() != static_cast<Eigen::Index>(d_) || !is_symmetric(p))
      throw InvalidInput("signal-plus-noise: P_" + std::to_string(i + 1) + " must be a symmetric " +
                         std::to_string(d_) + "x" + std::to_string(d_) + " matrix");
    try {
      psd_factor(p);
    } catch (const NotPositiveDefinite&) {
      throw InvalidInput("signal-plus-noise: P_" + std::to_string(i + 1) + " is not positive semi-definite");
    }
  }
}

SignalPlusNoiseModel SignalPlusNoiseModel::with_random_noise(std::size_t d, std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {kNoiseStream});
  return SignalPlusNoiseModel(d, build_noise_covariances(d, n, rng));
}

SignalPlusNoiseModel::Terms SignalPlusNoiseModel::terms(const Vector& theta, const Dataset* data,
                                                        std::size_t j) const {
  check_theta(theta);
  const auto [mu, sigma] = theta_unpack(theta, d_);
  if (j >= noise_.size()) throw InvalidInput("signal-plus-noise: datum index out of range");
  const Matrix v = sigma + noise_[j];
  Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success) {
    std::size_t pivot = 0;
    try {
      cholesky_factor(v);
    } catch (const NotPositiveDefinite& e) {
      pivot = e.pivot();
    }
    throw NotPositiveDefinite("Sigma + P_" + std::to_string(j + 1) + " is not positive definite (pivot " +
                                  std::to_string(pivot) + ")",
                              pivot);
  }
  Terms t;
  t.w = llt.solve(Matrix::Identity(v.rows(), v.cols()));
  t.w = 0.5 * (t.w + t.w.transpose()).eval();
  const Matrix& l = llt.matrixLLT();
  for (Eigen::Index r = 0; r < l.rows(); ++r) t.logdet += 2.0 * std::log(l(r, r));
  if (data != nullptr) {
    if (data->dim() != d_ || j >= data->size()) throw InvalidInput("signal-plus-noise: dataset shape mismatch");
    const Vector r = data->rows.row(static_cast<Eigen::Index>(j)).transpose() - mu;
    t.u = t.w * r;
    t.quad = r.dot(t.u);
  }
  return t;
}

Dataset SignalPlusNoiseModel::sample(const Vector& theta, Rng& rng) const {
  check_theta(theta);
  const auto [mu, sigma] = theta_unpack(theta, d_);
  Dataset data{Matrix(static_cast<Eigen::Index>(noise_.size()), static_cast<Eigen::Index>(d_))};
  for (std::size_t i = 0; i < noise_.size(); ++i) {
    Matrix factor;
    try {
      factor = psd_factor(sigma + noise_[i]);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("Sigma + P_" + std::to_string(i + 1) + " is not positive semi-definite", e.pivot());
    }
    data.rows.row(static_cast<Eigen::Index>(i)) = mvn_sample_factored(mu, factor, rng).transpose();
  }
  return data;
}

double SignalPlusNoiseModel::neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  const Terms t = terms(theta, &data, j);
  return 0.5 * (static_cast<double>(d_) * kLog2Pi + t.logdet + t.quad);
}

Vector SignalPlusNoiseModel::gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  const Terms t = terms(theta, &data, j);
  const auto di = static_cast<Eigen::Index>(d_);
  Vector g(static_cast<Eigen::Index>(dim_theta()));
  g.head(di) = -t.u;
  Eigen::Index at = di;
  for (const auto& [r, c] : vech_index_) {
    // 1/2 tr(W E) - 1/2 u^T E u
    g(at++) = r == c ? 0.5 * t.w(r, r) - 0.5 * t.u(r) * t.u(r) : t.w(r, c) - t.u(r) * t.u(c);
  }
  return g;
}

Matrix SignalPlusNoiseModel::hessian_datum(const Vector& theta, const Dataset& data, std::size_t j) const {
  const Terms t = terms(theta, &data, j);
  const auto di = static_cast<Eigen::Index>(d_);
  const auto p = static_cast<Eigen::Index>(dim_theta());
  const auto q = static_cast<Eigen::Index>(vech_index_.size());

  // E_a u for every covariance coordinate a.
  Matrix eu = Matrix::Zero(di, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    const auto [r, c] = vech_index_[static_cast<std::size_t>(a)];
    eu(r, a) += t.u(c);
    if (r != c) eu(c, a) += t.u(r);
  }
  const Matrix w_eu = t.w * eu;

  Matrix h(p, p);
  h.topLeftCorner(di, di) = t.w;
  h.block(0, di, di, q) = w_eu;
  h.block(di, 0, q, di) = w_eu.transpose();
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = a; b < q; ++b) {
      const double value = -0.5 * trace_basis(t.w, vech_index_[static_cast<std::size_t>(a)],
                                              vech_index_[static_cast<std::size_t>(b)]) +
                           eu.col(a).dot(w_eu.col(b));
      h(di + a, di + b) = value;
      h(di + b, di + a) = value;
    }
  return h;
}

Matrix SignalPlusNoiseModel::hessian(const Vector& theta, const Dataset& data) const {
  const auto p = static_cast<Eigen::Index>(dim_theta());
  Matrix h = Matrix::Zero(p, p);
  for (std::size_t j = 0; j < data.size(); ++j) h += hessian_datum(theta, data, j);
  return h;
}

std::optional<Matrix> SignalPlusNoiseModel::true_fim(const Vector& theta) const {
  const auto di = static_cast<Eigen::Index>(d_);
  const auto p = static_cast<Eigen::Index>(dim_theta());
  const auto q = static_cast<Eigen::Index>(vech_index_.size());
  Matrix f = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < noise_.size(); ++i) {
    const Terms t = terms(theta, nullptr, i);
    f.topLeftCorner(di, di) += t.w;
    for (Eigen::Index a = 0; a < q; ++a)
      for (Eigen::Index b = a; b < q; ++b) {
        const double value = 0.5 * trace_basis(t.w, vech_index_[static_cast<std::size_t>(a)],
                                               vech_index_[static_cast<std::size_t>(b)]);
        f(di + a, di + b) += value;
        if (a != b) f(di + b, di + a) += value;
      }
  }
  return f;
}

}  // namespace fimest
