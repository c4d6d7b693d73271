#pragma once

#include <cstddef>
#include <string>

#include "fimest/numerics.hpp"
#include "fimest/rng.hpp"

namespace fimest {

/// Symmetric, bounded, mean-zero distribution for the entries of a
/// simultaneous-perturbation direction.
struct PerturbationDistribution {
  enum class Kind { bernoulli_pm1, segmented_uniform };

  Kind kind = Kind::bernoulli_pm1;
  // segmented_uniform: |Delta_j| ~ U[inner, outer] with a random sign.
  double inner = 0.5;
  double outer = 1.5;

  static PerturbationDistribution bernoulli() { return {}; }
  static PerturbationDistribution segmented_uniform(double inner, double outer);

  /// Declared bound B_inv >= |1 / Delta_j|.
  double inverse_bound() const;
  void validate() const;
};

std::string to_string(PerturbationDistribution::Kind kind);
PerturbationDistribution::Kind parse_perturbation_kind(const std::string& text);

/// p i.i.d. entries from `dist`.
Vector draw_perturbation(std::size_t p, const PerturbationDistribution& dist, Rng& rng);

}  // namespace fimest
