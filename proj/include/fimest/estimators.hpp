#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "fimest/model.hpp"
#include "fimest/numerics.hpp"
#include "fimest/perturbation.hpp"
#include "fimest/rng.hpp"

namespace fimest {

enum class Variant { basic, feedback, indep, feedback_indep };
enum class InputMode { gradient, loglik_only };

std::string to_string(Variant v);
std::string to_string(InputMode m);
Variant parse_variant(const std::string& text);
InputMode parse_input_mode(const std::string& text);

/// Whether the variant splits each Hessian estimate into per-datum pieces.
constexpr bool uses_per_datum(Variant v) { return v == Variant::indep || v == Variant::feedback_indep; }
constexpr bool uses_feedback(Variant v) { return v == Variant::feedback || v == Variant::feedback_indep; }

struct EstimatorConfig {
  std::size_t hessians_per_dataset = 2;  // M
  std::size_t datasets = 1000;           // N
  double c = 1e-4;
  /// Inner half-width for the likelihood-only gradient approximation; defaults to c.
  std::optional<double> c_tilde;
  InputMode input_mode = InputMode::gradient;
  Variant variant = Variant::basic;
  PerturbationDistribution perturbation;
  std::uint64_t seed = 0;

  double inner_half_width() const { return c_tilde.value_or(c); }

  /// Throws ConfigError when M, N, c or c_tilde are out of range.
  void validate() const;
  /// validate() plus the capability checks against `model`.
  void validate_for(const Model& model) const;
};

struct FimEstimate {
  Matrix matrix;
  EstimatorConfig config;
  std::size_t datasets_used = 0;
};

/// Supplies perturbation vectors of the requested length, in draw order.
using PerturbationSource = std::function<Vector(std::size_t p)>;

/// g(theta + c*delta) - g(theta - c*delta) on one dataset.
Vector delta_g_gradient(const Model& model, const Vector& theta, const Dataset& data, const Vector& delta,
                        double c);

/// Likelihood-only replacement for delta_g_gradient. Each g(theta +- c*delta)
/// is the one-sided simultaneous-perturbation estimate along a shared
/// delta_tilde, so exactly four likelihood evaluations are made.
Vector delta_g_loglik(const Model& model, const Vector& theta, const Dataset& data, const Vector& delta,
                      const Vector& delta_tilde, double c, double c_tilde);

/// Per-datum forms of the two above (row j only).
Vector delta_g_gradient_datum(const Model& model, const Vector& theta, const Dataset& data, std::size_t j,
                              const Vector& delta, double c);
Vector delta_g_loglik_datum(const Model& model, const Vector& theta, const Dataset& data, std::size_t j,
                            const Vector& delta, const Vector& delta_tilde, double c, double c_tilde);

/// Symmetrized simultaneous-perturbation Hessian estimate
///   1/2 [ (dg / 2c) (delta^-1)^T + ((dg / 2c) (delta^-1)^T)^T ].
Matrix hessian_estimate(const Vector& delta_g, const Vector& delta, double c);

/// Zero-mean error term of hessian_estimate:
///   1/2 H D + 1/2 D^T H,  D = delta (delta^-1)^T - I.
Matrix psi(const Matrix& h, const Vector& delta);

// The four estimators. Pseudo data are drawn from `data_rng` and every
// perturbation from `perturbation_rng`, so two variants given identically
// seeded data streams see identical pseudo data. The named entry points run
// their own variant whatever config.variant says; `estimate` dispatches on it.
FimEstimate estimate_basic(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                           Rng& perturbation_rng);
FimEstimate estimate_feedback(const Model& model, const Vector& theta, const EstimatorConfig& config,
                              Rng& data_rng, Rng& perturbation_rng);
FimEstimate estimate_indep(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                           Rng& perturbation_rng);
FimEstimate estimate_feedback_indep(const Model& model, const Vector& theta, const EstimatorConfig& config,
                                    Rng& data_rng, Rng& perturbation_rng);

FimEstimate estimate(const Model& model, const Vector& theta, const EstimatorConfig& config, Rng& data_rng,
                     Rng& perturbation_rng);
/// Streams derived from config.seed.
FimEstimate estimate(const Model& model, const Vector& theta, const EstimatorConfig& config);

/// Runs config.variant with perturbations taken from `source` instead of
/// config.perturbation. In likelihood-only mode each Hessian estimate pulls
/// delta then delta_tilde.
FimEstimate estimate_with_source(const Model& model, const Vector& theta, const EstimatorConfig& config,
                                 Rng& data_rng, const PerturbationSource& source);

}  // namespace fimest
