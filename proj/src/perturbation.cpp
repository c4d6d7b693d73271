#include "fimest/perturbation.hpp"

#include "fimest/errors.hpp"

namespace fimest {

PerturbationDistribution PerturbationDistribution::segmented_uniform(double inner, double outer) {
  PerturbationDistribution d;
  d.kind = Kind::segmented_uniform;
  d.inner = inner;
  d.outer = outer;
  d.validate();
  return d;
}

double PerturbationDistribution::inverse_bound() const {
  switch (kind) {
    case Kind::bernoulli_pm1: return 1.0;
    case Kind::segmented_uniform: return 1.0 / inner;
  }
  throw ConfigError("unsupported perturbation distribution");
}

void PerturbationDistribution::validate() const {
  switch (kind) {
    case Kind::bernoulli_pm1: return;
    case Kind::segmented_uniform:
      if (!(inner > 0.0) || !(outer > inner))
        throw ConfigError("segmented_uniform perturbation needs 0 < inner < outer (got inner=" +
                          std::to_string(inner) + ", outer=" + std::to_string(outer) + ")");
      return;
  }
  throw ConfigError("unsupported perturbation distribution");
}

std::string to_string(PerturbationDistribution::Kind kind) {
  switch (kind) {
    case PerturbationDistribution::Kind::bernoulli_pm1: return "bernoulli";
    case PerturbationDistribution::Kind::segmented_uniform: return "segmented_uniform";
  }
  return "unknown";
}

PerturbationDistribution::Kind parse_perturbation_kind(const std::string& text) {
  if (text == "bernoulli" || text == "bernoulli_pm1") return PerturbationDistribution::Kind::bernoulli_pm1;
  if (text == "segmented_uniform") return PerturbationDistribution::Kind::segmented_uniform;
  throw ConfigError("unknown perturbation distribution '" + text + "'; valid: bernoulli, segmented_uniform");
}

Vector draw_perturbation(std::size_t p, const PerturbationDistribution& dist, Rng& rng) {
  if (p == 0) throw InvalidInput("draw_perturbation: p must be at least 1");
  Vector delta(static_cast<Eigen::Index>(p));
  switch (dist.kind) {
    case PerturbationDistribution::Kind::bernoulli_pm1:
      for (Eigen::Index j = 0; j < delta.size(); ++j) delta(j) = rng.coin() ? 1.0 : -1.0;
      return delta;
    case PerturbationDistribution::Kind::segmented_uniform:
      dist.validate();
      for (Eigen::Index j = 0; j < delta.size(); ++j) {
        const double magnitude = rng.uniform(dist.inner, dist.outer);
        delta(j) = rng.coin() ? magnitude : -magnitude;
      }
      return delta;
  }
  throw ConfigError("draw_perturbation: unsupported distribution kind");
}

}  // namespace fimest
