#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "fimest/errors.hpp"
#include "fimest/estimators.hpp"
#include "fimest/models/quadratic.hpp"
#include "fimest/models/scalar_normal.hpp"
#include "fimest/models/signal_plus_noise.hpp"
#include "oracles.hpp"

using namespace fimest;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix random_symmetric(Eigen::Index p, Rng& rng) {
  Matrix m(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) m(r, c) = rng.uniform(-2.0, 2.0);
  return 0.5 * (m + m.transpose());
}

// Likelihood-only model: the quadratic with its gradient hidden.
class NoGradientQuadratic final : public Model {
 public:
  explicit NoGradientQuadratic(Matrix a) : inner_(std::move(a)) {}
  std::string name() const override { return "no-gradient"; }
  std::size_t dim_theta() const override { return inner_.dim_theta(); }
  std::size_t data_dim() const override { return 1; }
  std::size_t sample_size() const override { return 1; }
  Dataset sample(const Vector& theta, Rng& rng) const override { return inner_.sample(theta, rng); }
  double neg_loglik(const Vector& theta, const Dataset& data) const override { return inner_.neg_loglik(theta, data); }

 private:
  QuadraticModel inner_;
};

// z_j ~ N(theta, C) in two dimensions with C known: the Hessian n C^-1 does
// not depend on the data, so all estimator noise is perturbation noise.
class BivariateMeanModel final : public Model {
 public:
  BivariateMeanModel(Matrix cov, std::size_t n) : cov_(std::move(cov)), prec_(cov_.inverse()), n_(n) {}
  std::string name() const override { return "bivariate-mean"; }
  std::size_t dim_theta() const override { return 2; }
  std::size_t data_dim() const override { return 2; }
  std::size_t sample_size() const override { return n_; }
  Dataset sample(const Vector& theta, Rng& rng) const override {
    Dataset d{Matrix(static_cast<Eigen::Index>(n_), 2)};
    for (std::size_t j = 0; j < n_; ++j) d.rows.row(static_cast<Eigen::Index>(j)) = mvn_sample(theta, cov_, rng).transpose();
    return d;
  }
  bool has_gradient() const override { return true; }
  bool has_per_datum() const override { return true; }
  double neg_loglik_datum(const Vector& theta, const Dataset& data, std::size_t j) const override {
    const Vector r = data.row(j) - theta;
    return 0.5 * r.dot(prec_ * r);
  }
  Vector gradient_datum(const Vector& theta, const Dataset& data, std::size_t j) const override {
    return prec_ * (theta - data.row(j));
  }
  std::optional<Matrix> true_fim(const Vector&) const override { return static_cast<double>(n_) * prec_; }

 private:
  Matrix cov_, prec_;
  std::size_t n_;
};

PerturbationSource fixed_source(std::vector<Vector> deltas) {
  auto store = std::make_shared<std::vector<Vector>>(std::move(deltas));
  auto at = std::make_shared<std::size_t>(0);
  return [store, at](std::size_t) { return (*store)[(*at)++ % store->size()]; };
}

}  // namespace

TEST_CASE("draw_perturbation: Bernoulli support, determinism and zero mean") {
  Rng rng(1);
  const Vector d = draw_perturbation(3, PerturbationDistribution::bernoulli(), rng);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(d(j)) == 1.0);

  Rng a(42), b(42);
  CHECK(draw_perturbation(6, {}, a) == draw_perturbation(6, {}, b));

  const int draws = 10000;
  Vector sum = Vector::Zero(4);
  for (int i = 0; i < draws; ++i) sum += draw_perturbation(4, {}, rng);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(sum(j) / draws) <= 4.0 / std::sqrt(draws));
  CHECK_THROWS_AS(draw_perturbation(0, {}, rng), InvalidInput);
}

TEST_CASE("draw_perturbation: segmented uniform respects its declared inverse bound") {
  const auto dist = PerturbationDistribution::segmented_uniform(0.5, 1.5);
  CHECK(dist.inverse_bound() == 2.0);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Vector d = draw_perturbation(5, dist, rng);
    for (Eigen::Index j = 0; j < 5; ++j) {
      CHECK(std::abs(d(j)) >= 0.5);
      CHECK(std::abs(d(j)) <= 1.5);
      CHECK(std::abs(1.0 / d(j)) <= dist.inverse_bound());
    }
  }
  CHECK_THROWS_AS(PerturbationDistribution::segmented_uniform(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(PerturbationDistribution::segmented_uniform(1.0, 0.5), ConfigError);
}

TEST_CASE("delta_g_gradient on quadratic and affine losses") {
  const QuadraticModel quad(diag2(2, 4));
  const Dataset data{Matrix::Zero(1, 1)};
  const Vector theta = vec({0.3, -0.7});
  const Vector dg = delta_g_gradient(quad, theta, data, vec({1, 1}), 0.01);
  CHECK(dg(0) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(dg(1) == doctest::Approx(0.08).epsilon(1e-12));

  const Vector flipped = delta_g_gradient(quad, theta, data, vec({-1, -1}), 0.01);
  CHECK((flipped + dg).cwiseAbs().maxCoeff() <= 1e-15);

  const QuadraticModel affine(Matrix::Zero(2, 2), vec({1.5, -2.0}), 3.0);
  CHECK(delta_g_gradient(affine, theta, data, vec({1, -1}), 0.01).cwiseAbs().maxCoeff() == 0.0);

  const NoGradientQuadratic hidden(diag2(2, 4));
  CHECK_THROWS_AS(delta_g_gradient(hidden, theta, data, vec({1, 1}), 0.01), CapabilityError);
}

TEST_CASE("delta_g_loglik on quadratic and constant losses") {
  const QuadraticModel quad(diag2(2, 4));
  const Dataset data{Matrix::Zero(1, 1)};
  const Vector theta = vec({0.0, 0.0});
  const Vector dg = delta_g_loglik(quad, theta, data, vec({1, 1}), vec({1, -1}), 0.01, 0.01);
  CHECK(dg(0) == doctest::Approx(-0.04).epsilon(1e-9));
  CHECK(dg(1) == doctest::Approx(0.04).epsilon(1e-9));

  const QuadraticModel constant(Matrix::Zero(2, 2), Vector::Zero(2), 7.0);
  CHECK(delta_g_loglik(constant, theta, data, vec({1, -1}), vec({-1, -1}), 0.01, 0.01).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("delta_g_loglik averaged over every delta_tilde sign pattern equals delta_g_gradient") {
  Matrix a(2, 2);
  a << 2.0, 0.7, 0.7, 4.0;
  const QuadraticModel quad(a);
  const Dataset data{Matrix::Zero(1, 1)};
  const Vector theta = vec({0.0, 0.0});
  for (const Vector& delta : oracle::bernoulli_patterns(2)) {
    const Vector target = delta_g_gradient(quad, theta, data, delta, 0.01);
    Vector avg = Vector::Zero(2);
    const auto patterns = oracle::bernoulli_patterns(2);
    for (const Vector& tilde : patterns) avg += delta_g_loglik(quad, theta, data, delta, tilde, 0.01, 0.01);
    avg /= static_cast<double>(patterns.size());
    CHECK(oracle::rel_error(avg, target) <= 1e-9);
  }
}

TEST_CASE("hessian_estimate: hand values and literal formula") {
  const Matrix h = hessian_estimate(vec({0.04, 0.08}), vec({1, 1}), 0.01);
  Matrix expect(2, 2);
  expect << 2, 3, 3, 4;
  CHECK((h - expect).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix h2 = hessian_estimate(vec({0.04, -0.08}), vec({1, -1}), 0.01);
  expect << 2, -3, -3, 4;
  CHECK((h2 - expect).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(hessian_estimate(Vector::Zero(3), vec({1, -1, 1}), 0.1).isZero(0.0));
  CHECK_THROWS_AS(hessian_estimate(vec({1, 1}), vec({1, 0}), 0.1), InvalidInput);
  CHECK_THROWS_AS(hessian_estimate(vec({1, 1, 1}), vec({1, 1}), 0.1), InvalidInput);

  Rng rng(4);
  const auto dist = PerturbationDistribution::segmented_uniform(0.5, 1.5);
  for (int t = 0; t < 50; ++t) {
    Vector dg(4);
    for (Eigen::Index j = 0; j < 4; ++j) dg(j) = rng.uniform(-1, 1);
    const Vector delta = draw_perturbation(4, dist, rng);
    const Matrix got = hessian_estimate(dg, delta, 1e-3);
    CHECK(oracle::rel_error(got, oracle::hessian_literal(dg, delta, 1e-3)) <= 1e-14);
    CHECK(got == got.transpose());
  }
}

TEST_CASE("psi: hand values") {
  const Matrix out = psi(Matrix::Identity(2, 2), vec({1, -1}));
  Matrix expect(2, 2);
  expect << 0, -1, -1, 0;
  CHECK((out - expect).cwiseAbs().maxCoeff() <= 1e-15);

  // Scalars: D = delta / delta - 1 = 0, so psi vanishes.
  Matrix h1(1, 1);
  h1(0, 0) = 3.7;
  CHECK(psi(h1, vec({-1})).isZero(0.0));
  CHECK(psi(h1, vec({0.6})).isZero(1e-15));

  // For p >= 2 the all-ones direction gives D = 11^T - I, not zero.
  const Matrix ones = psi(Matrix::Identity(2, 2), vec({1, 1}));
  expect << 0, 1, 1, 0;
  CHECK((ones - expect).cwiseAbs().maxCoeff() <= 1e-15);

  CHECK_THROWS_AS(psi(Matrix::Identity(2, 2), vec({1, 0})), InvalidInput);
  CHECK_THROWS_AS(psi(Matrix::Identity(3, 3), vec({1, 1})), InvalidInput);
}

TEST_CASE("psi matches the literal D-matrix formula and is symmetric") {
  Rng rng(17);
  const auto dist = PerturbationDistribution::segmented_uniform(0.5, 1.5);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index p = 1 + t % 6;
    const Matrix h = random_symmetric(p, rng);
    const Vector delta = t % 2 ? draw_perturbation(static_cast<std::size_t>(p), dist, rng)
                               : draw_perturbation(static_cast<std::size_t>(p), {}, rng);
    const Matrix got = psi(h, delta);
    CHECK((got - oracle::psi_literal(h, delta)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("psi sums to zero over all Bernoulli patterns") {
  Rng rng(23);
  for (int p = 1; p <= 4; ++p)
    for (int t = 0; t < 10; ++t) {
      const Matrix h = random_symmetric(p, rng);
      Matrix sum = Matrix::Zero(p, p);
      for (const Vector& delta : oracle::bernoulli_patterns(p)) sum += psi(h, delta);
      CHECK(sum.cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("Bernoulli diagonal property") {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    const int p = 2 + t % 4;
    const Vector delta = draw_perturbation(static_cast<std::size_t>(p), {}, rng);
    const Matrix d = delta * delta.cwiseInverse().transpose() - Matrix::Identity(p, p);
    CHECK(d.diagonal().isZero(0.0));

    Vector dg(p);
    for (int j = 0; j < p; ++j) dg(j) = rng.uniform(-1, 1);
    const double c = 1e-3;
    const Matrix h = hessian_estimate(dg, delta, c);
    for (int j = 0; j < p; ++j) CHECK(h(j, j) == doctest::Approx(dg(j) / (2 * c) * delta(j)).epsilon(1e-14));

    const Matrix hs = random_symmetric(p, rng);
    const Matrix ps = psi(hs, delta);
    for (int j = 0; j < p; ++j) {
      double expect = 0.0;
      for (int k = 0; k < p; ++k)
        if (k != j) expect += hs(j, k) * delta(k) * delta(j);
      CHECK(ps(j, j) == doctest::Approx(expect).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("quadratic exactness: H_hat - psi(A) = A for every Bernoulli pattern and c") {
  Rng rng(31);
  for (int p = 1; p <= 4; ++p) {
    const Matrix a = random_symmetric(p, rng);
    const QuadraticModel quad(a);
    const Dataset data{Matrix::Zero(1, 1)};
    Vector theta(p);
    for (int j = 0; j < p; ++j) theta(j) = rng.uniform(-1, 1);
    for (double c : {1e-4, 1e-2, 0.5, 3.0})
      for (const Vector& delta : oracle::bernoulli_patterns(p)) {
        const Matrix h = hessian_estimate(delta_g_gradient(quad, theta, data, delta, c), delta, c);
        CHECK((h - psi(a, delta) - a).cwiseAbs().maxCoeff() <= 1e-10);
      }
  }
}

TEST_CASE("hessian_estimate is unbiased for a constant Hessian") {
  Rng rng(37);
  const int p = 4;
  const Matrix a = random_symmetric(p, rng) + 3.0 * Matrix::Identity(p, p);
  const QuadraticModel quad(a);
  const Dataset data{Matrix::Zero(1, 1)};
  const Vector theta = Vector::Constant(p, 0.2);
  const int draws = 10000;
  Matrix sum = Matrix::Zero(p, p), sq = Matrix::Zero(p, p);
  for (int i = 0; i < draws; ++i) {
    const Vector delta = draw_perturbation(p, {}, rng);
    const Matrix h = hessian_estimate(delta_g_gradient(quad, theta, data, delta, 1e-4), delta, 1e-4);
    sum += h;
    sq += h.cwiseProduct(h);
  }
  const Matrix mean = sum / draws;
  const Matrix var = (sq / draws - mean.cwiseProduct(mean)) * (double(draws) / (draws - 1));
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) {
      const double se = std::sqrt(std::max(var(r, c), 0.0) / draws);
      CHECK(std::abs(mean(r, c) - a(r, c)) <= 5.0 * se + 1e-9);
    }
}

TEST_CASE("estimate_basic with a forced perturbation on a quadratic") {
  const QuadraticModel quad(diag2(2, 4));
  EstimatorConfig cfg;
  cfg.datasets = 1;
  cfg.hessians_per_dataset = 1;
  cfg.c = 1e-4;
  Rng data(1);
  const FimEstimate est = estimate_with_source(quad, vec({0.1, 0.2}), cfg, data, fixed_source({vec({1, 1})}));
  Matrix expect(2, 2);
  expect << 2, 3, 3, 4;
  CHECK((est.matrix - expect).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(est.datasets_used == 1);
  CHECK(est.matrix == est.matrix.transpose());
}

TEST_CASE("feedback on a quadratic converges to A after one step") {
  // With F'_1 = H_hat_1 any later step subtracts psi of a symmetric matrix; on
  // a quadratic H_hat - psi(A) = A, so the estimate pulls toward A.
  const Matrix a = diag2(2, 4);
  const QuadraticModel quad(a);
  EstimatorConfig cfg;
  cfg.datasets = 4000;
  Rng d1(1), p1(2), d2(1), p2(2);
  const double basic_err = spectral_norm(Matrix(estimate_basic(quad, vec({0, 0}), cfg, d1, p1).matrix - a));
  const double feedback_err = spectral_norm(Matrix(estimate_feedback(quad, vec({0, 0}), cfg, d2, p2).matrix - a));
  CHECK(feedback_err < 0.5 * basic_err);
}

TEST_CASE("scalar normal mean model: the estimate is exact") {
  const ScalarNormalModel model(1);
  EstimatorConfig cfg;
  cfg.datasets = 10000;
  cfg.seed = 5;
  const FimEstimate est = estimate(model, vec({0.3}), cfg);
  CHECK(est.matrix(0, 0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(est.matrix(0, 0) - 1.0) <= 1e-8);
}

TEST_CASE("variant reductions on shared streams") {
  const SignalPlusNoiseModel one = SignalPlusNoiseModel::with_random_noise(2, 1, 3);
  const SignalPlusNoiseModel many = SignalPlusNoiseModel::with_random_noise(2, 6, 3);
  Matrix sigma(2, 2);
  sigma << 1, 0.5, 0.5, 1;
  const Vector theta = theta_pack(Vector::Zero(2), sigma);

  for (InputMode mode : {InputMode::gradient, InputMode::loglik_only}) {
    CAPTURE(to_string(mode));
    EstimatorConfig cfg;
    cfg.input_mode = mode;
    cfg.datasets = 1;
    cfg.hessians_per_dataset = 3;
    auto run = [&](const Model& m, Variant v, std::size_t n_sets) {
      EstimatorConfig c = cfg;
      c.datasets = n_sets;
      Rng data(77), pert(78);
      c.variant = v;
      return estimate(m, theta, c, data, pert).matrix;
    };
    // N = 1: the feedback term vanishes.
    CHECK(run(many, Variant::feedback, 1) == run(many, Variant::basic, 1));
    // Same terms, summed per datum first, so equal up to rounding.
    CHECK(oracle::rel_error(run(many, Variant::feedback_indep, 1), run(many, Variant::indep, 1)) <= 1e-13);
    // n = 1: the per-datum decomposition has a single term.
    CHECK(run(one, Variant::indep, 25) == run(one, Variant::basic, 25));
    CHECK(run(one, Variant::feedback_indep, 25) == run(one, Variant::feedback, 25));
    // Sanity: the reductions are not vacuous.
    CHECK(run(many, Variant::feedback, 25) != run(many, Variant::basic, 25));
  }
}

TEST_CASE("estimators are symmetric and deterministic") {
  const SignalPlusNoiseModel model = SignalPlusNoiseModel::with_random_noise(2, 5, 9);
  Matrix sigma(2, 2);
  sigma << 1, 0.5, 0.5, 1;
  const Vector theta = theta_pack(Vector::Zero(2), sigma);
  for (Variant v : {Variant::basic, Variant::feedback, Variant::indep, Variant::feedback_indep}) {
    EstimatorConfig cfg;
    cfg.variant = v;
    cfg.datasets = 20;
    cfg.seed = 1234;
    const FimEstimate a = estimate(model, theta, cfg);
    const FimEstimate b = estimate(model, theta, cfg);
    CHECK(a.matrix == b.matrix);
    CHECK(a.matrix == a.matrix.transpose());
    CHECK(a.config.variant == v);
  }
}

TEST_CASE("capability and configuration errors") {
  const NoGradientQuadratic hidden(diag2(2, 4));
  const QuadraticModel quad(diag2(2, 4));
  EstimatorConfig cfg;
  cfg.datasets = 2;
  Rng d(1), p(2);
  CHECK_THROWS_AS(estimate_basic(hidden, vec({0, 0}), cfg, d, p), ConfigError);
  cfg.input_mode = InputMode::loglik_only;
  CHECK_NOTHROW(estimate_basic(hidden, vec({0, 0}), cfg, d, p));

  cfg.input_mode = InputMode::gradient;
  CHECK_THROWS_AS(estimate_indep(quad, vec({0, 0}), cfg, d, p), ConfigError);
  CHECK_THROWS_AS(estimate_feedback_indep(quad, vec({0, 0}), cfg, d, p), ConfigError);

  EstimatorConfig bad;
  bad.c = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.c_tilde = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.hessians_per_dataset = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.datasets = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK_THROWS_AS(estimate(quad, vec({0, 0, 0}), EstimatorConfig{}), InvalidInput);
  CHECK_THROWS_AS(parse_variant("fancy"), ConfigError);
  CHECK_THROWS_AS(parse_input_mode("hessian"), ConfigError);
}

TEST_CASE("independent perturbation shrinks element variance by about n") {
  Matrix cov(2, 2);
  cov << 1.0, 0.4, 0.4, 2.0;
  const std::size_t n = 10;
  const BivariateMeanModel model(cov, n);
  const Vector theta = vec({0.0, 0.0});
  const int reps = 200;
  std::vector<Matrix> basic, indep;
  for (int r = 0; r < reps; ++r) {
    EstimatorConfig cfg;
    cfg.datasets = 5;
    Rng d1 = Rng::derive(101, {std::uint64_t(r), 0}), p1 = Rng::derive(101, {std::uint64_t(r), 1});
    Rng d2 = Rng::derive(101, {std::uint64_t(r), 0}), p2 = Rng::derive(101, {std::uint64_t(r), 2});
    basic.push_back(estimate_basic(model, theta, cfg, d1, p1).matrix);
    indep.push_back(estimate_indep(model, theta, cfg, d2, p2).matrix);
  }
  auto element_var = [&](const std::vector<Matrix>& xs, int r, int c) {
    double mean = 0.0, ss = 0.0;
    for (const auto& x : xs) mean += x(r, c);
    mean /= xs.size();
    for (const auto& x : xs) ss += (x(r, c) - mean) * (x(r, c) - mean);
    return ss / (xs.size() - 1);
  };
  for (int r = 0; r < 2; ++r)
    for (int c = r; c < 2; ++c) {
      const double ratio = element_var(basic, r, c) / element_var(indep, r, c);
      CAPTURE(r);
      CAPTURE(c);
      CAPTURE(ratio);
      CHECK(ratio >= n / 3.0);
      CHECK(ratio <= 3.0 * n);
    }
}
