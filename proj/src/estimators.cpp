#include "fimest/estimators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fimest/errors.hpp"

namespace fimest {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::basic: return "basic";
    case Variant::feedback: return "feedback";
    case Variant::indep: return "indep";
    case Variant::feedback_indep: return "feedback_indep";
  }
  return "unknown";
}

std::string to_string(InputMode m) {
  switch (m) {
    case InputMode::gradient: return "gradient";
    case InputMode::loglik_only: return "loglik_only";
  }
  return "unknown";
}

Variant parse_variant(const std::string& text) {
  if (text == "basic") return Variant::basic;
  if (text == "feedback") return Variant::feedback;
  if (text == "indep") return Variant::indep;
  if (text == "feedback_indep") return Variant::feedback_indep;
  throw ConfigError("unknown variant '" + text + "'; valid: basic, feedback, indep, feedback_indep");
}

InputMode parse_input_mode(const std::string& text) {
  if (text == "gradient") return InputMode::gradient;
  if (text == "loglik_only" || text == "loglik") return InputMode::loglik_only;
  throw ConfigError("unknown input_mode '" + text + "'; valid: gradient, loglik_only");
}

void EstimatorConfig::validate() const {
  if (hessians_per_dataset < 1) throw ConfigError("M must be a positive integer");
  if (datasets < 1) throw ConfigError("N must be a positive integer");
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c must be a positive finite number");
  if (c_tilde && (!(*c_tilde > 0.0) || !std::isfinite(*c_tilde)))
    throw ConfigError("c_tilde must be a positive finite number");
  perturbation.validate();
}

void EstimatorConfig::validate_for(const Model& model) const {
  validate();
  if (input_mode == InputMode::gradient && !model.has_gradient())
    throw ConfigError("input_mode = gradient but model '" + model.name() + "' has no gradient");
  if (uses_per_datum(variant) && !model.has_per_datum())
    throw ConfigError("variant = " + to_string(variant) + " needs per-datum access, which model '" +
                      model.name() + "' does not provide");
}

namespace {

Vector inverse_entries(const Vector& delta, const char* who) {
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta(j) == 0.0 || !std::isfinite(delta(j)))
      throw InvalidInput(std::string(who) + ": perturbation entry " + std::to_string(j) + " is zero or non-finite");
  return delta.cwiseInverse();
}

void check_lengths(const Model& model, const Vector& theta, const Vector& delta) {
  model.check_theta(theta);
  if (delta.size() != theta.size())
    throw InvalidInput("perturbation has length " + std::to_string(delta.size()) + ", theta has " +
                       std::to_string(theta.size()));
}

// Four-point one-sided SP difference shared by the full and per-datum forms.
template <typename Loss>
Vector loglik_difference(Loss&& loss, const Vector& theta, const Vector& delta, const Vector& delta_tilde, double c,
                         double c_tilde) {
  const Vector inv = inverse_entries(delta_tilde, "delta_g_loglik");
  const Vector plus = theta + c * delta;
  const Vector minus = theta - c * delta;
  const Vector step = c_tilde * delta_tilde;
  const double upper = loss(Vector(plus + step)) - loss(plus);
  const double lower = loss(Vector(minus + step)) - loss(minus);
  return ((upper - lower) / c_tilde) * inv;
}

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) throw NumericalError(std::string(who) + ": produced non-finite values");
}

class Runner {
 public:
  Runner(const Model& model, const Vector& theta, const EstimatorConfig& config, Variant variant,
         const PerturbationSource& source)
      : model_(model), theta_(theta), config_(config), variant_(variant), source_(source),
        p_(model.dim_theta()), m_(config.hessians_per_dataset) {
    EstimatorConfig effective = config;
    effective.variant = variant;
    effective.validate_for(model);
    model.check_theta(theta);
  }

  FimEstimate run(Rng& data_rng) {
    const Eigen::Index p = static_cast<Eigen::Index>(p_);
    Matrix total = Matrix::Zero(p, p);      // basic / indep running sum
    Matrix running = Matrix::Zero(p, p);    // feedback estimate F'_{M,i}
    std::vector<Matrix> per_datum;          // feedback_indep: F'_{j,i}

    for (std::size_t i = 1; i <= config_.datasets; ++i) {
      const Dataset data = model_.sample(theta_, data_rng);
      switch (variant_) {
        case Variant::basic:
          for (std::size_t k = 0; k < m_; ++k) total += draw_full(data).hessian;
          break;
        case Variant::feedback: {
          Matrix step = Matrix::Zero(p, p);
          for (std::size_t k = 0; k < m_; ++k) {
            const Draw d = draw_full(data);
            step += d.hessian - psi(running, d.delta);
          }
          running = feedback_update(running, step, i);
          break;
        }
        case Variant::indep:
          for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t j = 0; j < data.size(); ++j) total += draw_datum(data, j).hessian;
          break;
        case Variant::feedback_indep: {
          if (per_datum.empty()) per_datum.assign(data.size(), Matrix::Zero(p, p));
          if (per_datum.size() != data.size())
            throw InvalidInput("feedback_indep: pseudo datasets changed size between draws");
          std::vector<Matrix> steps(data.size(), Matrix::Zero(p, p));
          for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t j = 0; j < data.size(); ++j) {
              const Draw d = draw_datum(data, j);
              steps[j] += d.hessian - psi(per_datum[j], d.delta);
            }
          for (std::size_t j = 0; j < data.size(); ++j) per_datum[j] = feedback_update(per_datum[j], steps[j], i);
          break;
        }
      }
    }

    Matrix result;
    switch (variant_) {
      case Variant::basic:
      case Variant::indep:
        result = total / static_cast<double>(config_.datasets * m_);
        break;
      case Variant::feedback:
        result = running;
        break;
      case Variant::feedback_indep:
        result = Matrix::Zero(p, p);
        for (const Matrix& f : per_datum) result += f;
        break;
    }
    result = symmetrize(result);
    require_finite(result, "estimator");

    FimEstimate out;
    out.matrix = std::move(result);
    out.config = config_;
    out.config.variant = variant_;
    out.datasets_used = config_.datasets;
    return out;
  }

 private:
  struct Draw {
    Matrix hessian;
    Vector delta;
  };

  Vector next_delta() {
    Vector d = source_(p_);
    if (static_cast<std::size_t>(d.size()) != p_)
      throw InvalidInput("perturbation source returned length " + std::to_string(d.size()) + ", expected " +
                         std::to_string(p_));
    return d;
  }

  Draw draw_full(const Dataset& data) {
    Draw d;
    d.delta = next_delta();
    Vector dg;
    if (config_.input_mode == InputMode::gradient) {
      dg = delta_g_gradient(model_, theta_, data, d.delta, config_.c);
    } else {
      const Vector tilde = next_delta();
      dg = delta_g_loglik(model_, theta_, data, d.delta, tilde, config_.c, config_.inner_half_width());
    }
    d.hessian = hessian_estimate(dg, d.delta, config_.c);
    return d;
  }

  Draw draw_datum(const Dataset& data, std::size_t j) {
    Draw d;
    d.delta = next_delta();
    Vector dg;
    if (config_.input_mode == InputMode::gradient) {
      dg = delta_g_gradient_datum(model_, theta_, data, j, d.delta, config_.c);
    } else {
      const Vector tilde = next_delta();
      dg = delta_g_loglik_datum(model_, theta_, data, j, d.delta, tilde, config_.c, config_.inner_half_width());
    }
    d.hessian = hessian_estimate(dg, d.delta, config_.c);
    return d;
  }

  // F'_i = ((i-1)/i) F'_{i-1} + (1/(iM)) sum_k [H_k - Psi_k(F'_{i-1})]
  Matrix feedback_update(const Matrix& previous, const Matrix& step, std::size_t i) const {
    const double di = static_cast<double>(i);
    return ((di - 1.0) / di) * previous + step / static_cast<double>(i * m_);
  }

  const Model& model_;
  const Vector& theta_;
  const EstimatorConfig& config_;
  Variant variant_;
  const PerturbationSource& source_;
  std::size_t p_;
  std::size_t m_;
};

FimEstimate run_variant(const Model& model, const Vector& theta, const EstimatorConfig& config, Variant variant,
                        Rng& data_rng, Rng& perturbation_rng) {
  const PerturbationDistribution dist = config.perturbation;
  PerturbationSource source = [&perturbation_rng, dist](std::size_t p) {
    return draw_perturbation(p, dist, perturbation_rng);
  };
  return Runner(model, theta, config, variant, source).run(data_rng);
}

}  // namespace

Vector delta_g_gradient(const Model& model, const Vector& theta, const Dataset& data, const Vector& delta,
                        double c) {
  check_lengths(model, theta, delta);
  if (!model.has_gradient()) throw CapabilityError(model.name() + ": gradient mode needs a model gradient");
  return model.gradient(theta + c * delta, data) - model.gradient(theta - c * delta, data);
}

Vector delta_g_loglik(const Model& model, const Vector& theta, const Dataset& data, const Vector& delta,
                      const Vector& delta_tilde, double c, double c_tilde) {
  check_lengths(model, theta, delta);
  check_lengths(model, theta, delta_tilde);
  return loglik_difference([&](const Vector& t) { return model.neg_loglik(t, data); }, theta, delta, delta_tilde, c,
                           c_tilde);
}

Vector delta_g_gradient_datum(const Model& model, const Vector& theta, const Dataset& data, std::size_t j,
                              const Vector& delta, double c) {
  check_lengths(model, theta, delta);
  return model.gradient_datum(theta + c * delta, data, j) - model.gradient_datum(theta - c * delta, data, j);
}

Vector delta_g_loglik_datum(const Model& model, const Vector& theta, const Dataset& data, std::size_t j,
                            const Vector& delta, const Vector& delta_tilde, double c, double c_tilde) {
  check_lengths(model, theta, delta);
  check_lengths(model, theta, delta_tilde);
  return loglik_difference([&](const Vector& t) { return model.neg_loglik_datum(t, data, j); }, theta, delta,
                           delta_tilde, c, c_tilde);
}

Matrix hessian_estimate(const Vector& delta_g, const Vector& delta, double c) {
  if (delta_g.size() != delta.size())
    throw InvalidInput("hessian_estimate: delta_g has length " + std::to_string(delta_g.size()) +
                       ", perturbation has " + std::to_string(delta.size()));
  if (!(c > 0.0)) throw InvalidInput("hessian_estimate: c must be positive");
  const Vector inv = inverse_entries(delta, "hessian_estimate");
  const Matrix half = (delta_g / (2.0 * c)) * inv.transpose();
  return 0.5 * (half + half.transpose());
}

Matrix psi(const Matrix& h, const Vector& delta) {
  if (h.rows() != h.cols() || h.rows() != delta.size())
    throw InvalidInput("psi: H is " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()) +
                       ", perturbation has length " + std::to_string(delta.size()));
  const Vector inv = inverse_entries(delta, "psi");
  // H D = (H delta) (delta^-1)^T - H  and  D^T H = delta^-1 (delta^T H) - H.
  const Vector h_delta = h * delta;
  const Vector delta_h = h.transpose() * delta;
  return 0.5 * (h_delta * inv.transpose() + inv * delta_h.transpose()) - h;
}

FimEstimate estimate_basic(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                           Rng& perturbation_rng) {
  return run_variant(model, theta, config, Variant::basic, data_rng, perturbation_rng);
}

FimEstimate estimate_feedback(const Model& model, const Vector& theta, const EstimatorConfig& config,
                              Rng& data_rng, Rng& perturbation_rng) {
  return run_variant(model, theta, config, Variant::feedback, data_rng, perturbation_rng);
}

FimEstimate estimate_indep(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                           Rng& perturbation_rng) {
  return run_variant(model, theta, config, Variant::indep, data_rng, perturbation_rng);
}

FimEstimate estimate_feedback_indep(const Model& model, const Vector& theta, const EstimatorConfig& config,
                                    Rng& data_rng, Rng& perturbation_rng) {
  return run_variant(model, theta, config, Variant::feedback_indep, data_rng, perturbation_rng);
}

FimEstimate estimate(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                     Rng& perturbation_rng) {
  return run_variant(model, theta, config, config.variant, data_rng, perturbation_rng);
}

FimEstimate estimate(const Model& model, const Vector& theta, const EstimatorConfig& config) {
  Rng data_rng = Rng::derive(config.seed, {label_key("data")});
  Rng perturbation_rng = Rng::derive(config.seed, {label_key("perturbation")});
  return estimate(model, theta, config, data_rng, perturbation_rng);
}

FimEstimate estimate_with_source(const Model& model, const Vector& theta, const EstimatorConfig& config,
                                 Rng& data_rng, const PerturbationSource& source) {
  return Runner(model, theta, config, config.variant, source).run(data_rng);
}

}  // namespace fimest
