#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fimest/estimators.hpp"
#include "fimest/model.hpp"

namespace fimest {

/// ||F_est - F_true|| / ||F_true|| in the spectral norm.
double relative_deviation_norm(const Matrix& estimate, const Matrix& truth);

struct StudyVariant {
  std::string label;
  EstimatorConfig config;
};

/// "basic", "feedback", ... with an input-mode suffix for likelihood-only runs.
std::string default_label(const EstimatorConfig& config);

struct StudyConfig {
  std::shared_ptr<const Model> model;
  Vector theta;
  /// Reference FIM. When empty the model's true_fim(theta) is used.
  std::optional<Matrix> oracle;
  /// Row label in rendered tables, e.g. "Gradient Function N = 40,000".
  std::string setting;
  std::vector<StudyVariant> variants;
  std::size_t replications = 50;
  /// Common random numbers: every variant of a replication sees the same
  /// pseudo data. Perturbation streams stay independent per variant.
  bool paired = true;
  std::uint64_t seed = 0;
  /// Worker threads; 0 picks hardware concurrency.
  unsigned threads = 0;
  /// Called after each finished replication (from worker threads, serialized).
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct ReplicationResult {
  std::size_t replication = 0;
  /// One relative deviation norm per variant, in StudyConfig::variants order.
  std::vector<double> norms;
};

struct VariantSummary {
  std::string label;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// One-sided test that `enhanced` has the smaller mean norm than `baseline`.
struct Comparison {
  std::string baseline;
  std::string enhanced;
  double p_value = 0.5;
  double statistic = 0.0;
  bool degenerate = false;
};

struct StudySummary {
  std::string setting;
  std::size_t replications = 0;
  bool paired = true;
  std::vector<VariantSummary> variants;
  /// Every ordered pair (i < j) of variants, baseline i against enhanced j.
  std::vector<Comparison> comparisons;

  const VariantSummary& variant(const std::string& label) const;
  const Comparison& comparison(const std::string& baseline, const std::string& enhanced) const;
};

struct StudyResult {
  std::vector<ReplicationResult> replications;
  StudySummary summary;

  /// Per-replication norms of one variant.
  std::vector<double> norms(const std::string& label) const;
};

/// Streams used by replication `r` for the variant labelled `label`.
Rng study_data_stream(std::uint64_t seed, std::size_t r, const std::string& label, bool paired);
Rng study_perturbation_stream(std::uint64_t seed, std::size_t r, const std::string& label);

/// Resolves the reference FIM, throwing ConfigError if there is none.
Matrix resolve_oracle(const StudyConfig& study);

StudySummary summarize(std::span<const ReplicationResult> results, const std::vector<std::string>& labels,
                       bool paired, const std::string& setting = {});

/// Runs the replications (concurrently when threads > 1). Output depends only
/// on the config, not on the worker count.
StudyResult run_study(const StudyConfig& study);

}  // namespace fimest
