#include "fimest/study.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "fimest/errors.hpp"
#include "fimest/stats.hpp"

namespace fimest {

double relative_deviation_norm(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw InvalidInput("relative_deviation_norm: matrices differ in shape");
  const double scale = spectral_norm(truth);
  if (scale == 0.0) throw InvalidInput("relative_deviation_norm: reference matrix is zero");
  return spectral_norm(estimate - truth) / scale;
}

std::string default_label(const EstimatorConfig& config) {
  std::string label = to_string(config.variant);
  if (config.input_mode == InputMode::loglik_only) label += "/loglik";
  return label;
}

const VariantSummary& StudySummary::variant(const std::string& label) const {
  for (const auto& v : variants)
    if (v.label == label) return v;
  throw InvalidInput("study summary has no variant '" + label + "'");
}

const Comparison& StudySummary::comparison(const std::string& baseline, const std::string& enhanced) const {
  for (const auto& c : comparisons)
    if (c.baseline == baseline && c.enhanced == enhanced) return c;
  throw InvalidInput("study summary has no comparison " + baseline + " vs " + enhanced);
}

std::vector<double> StudyResult::norms(const std::string& label) const {
  std::size_t index = summary.variants.size();
  for (std::size_t v = 0; v < summary.variants.size(); ++v)
    if (summary.variants[v].label == label) index = v;
  if (index == summary.variants.size()) throw InvalidInput("study has no variant '" + label + "'");
  std::vector<double> out;
  out.reserve(replications.size());
  for (const auto& r : replications) out.push_back(r.norms.at(index));
  return out;
}

Rng study_data_stream(std::uint64_t seed, std::size_t r, const std::string& label, bool paired) {
  if (paired) return Rng::derive(seed, {label_key("data"), r});
  return Rng::derive(seed, {label_key("data"), r, label_key(label)});
}

Rng study_perturbation_stream(std::uint64_t seed, std::size_t r, const std::string& label) {
  return Rng::derive(seed, {label_key("perturbation"), r, label_key(label)});
}

Matrix resolve_oracle(const StudyConfig& study) {
  if (!study.model) throw ConfigError("study has no model");
  if (study.oracle) {
    const auto p = static_cast<Eigen::Index>(study.model->dim_theta());
    if (study.oracle->rows() != p || study.oracle->cols() != p)
      throw ConfigError("study oracle has the wrong order for model '" + study.model->name() + "'");
    return *study.oracle;
  }
  if (auto fim = study.model->true_fim(study.theta)) return *fim;
  throw ConfigError("no reference FIM available for model '" + study.model->name() +
                    "'; supply an oracle (e.g. the cached mixture approximation)");
}

StudySummary summarize(std::span<const ReplicationResult> results, const std::vector<std::string>& labels,
                       bool paired, const std::string& setting) {
  if (labels.empty()) throw InvalidInput("summarize: no variants");
  StudySummary summary;
  summary.setting = setting;
  summary.replications = results.size();
  summary.paired = paired;

  std::vector<std::vector<double>> columns(labels.size());
  for (const auto& r : results) {
    if (r.norms.size() != labels.size()) throw InvalidInput("summarize: replication has wrong number of norms");
    for (std::size_t v = 0; v < labels.size(); ++v) columns[v].push_back(r.norms[v]);
  }
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const MeanInterval ci = mean_ci(columns[v]);
    summary.variants.push_back({labels[v], ci.mean, ci.lower, ci.upper});
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      const TTestResult t = one_sided_t_test(columns[i], columns[j], paired);
      summary.comparisons.push_back({labels[i], labels[j], t.p_value, t.statistic, t.degenerate});
    }
  return summary;
}

StudyResult run_study(const StudyConfig& study) {
  if (!study.model) throw ConfigError("study has no model");
  if (study.variants.empty()) throw ConfigError("study lists no estimator variants");
  if (study.replications < 2) throw ConfigError("study needs at least 2 replications");
  std::set<std::string> seen;
  for (const auto& v : study.variants) {
    if (!seen.insert(v.label).second) throw ConfigError("duplicate variant label '" + v.label + "'");
    v.config.validate_for(*study.model);
  }
  study.model->check_theta(study.theta);
  const Matrix oracle = resolve_oracle(study);

  const std::size_t total = study.replications;
  std::vector<ReplicationResult> results(total);
  std::vector<std::exception_ptr> failures(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex progress_mutex;
  std::size_t done = 0;

  auto worker = [&] {
    for (std::size_t r = next++; r < total && !abort; r = next++) {
      try {
        ReplicationResult rep;
        rep.replication = r;
        for (const auto& v : study.variants) {
          Rng data = study_data_stream(study.seed, r, v.label, study.paired);
          Rng perturbation = study_perturbation_stream(study.seed, r, v.label);
          const FimEstimate est = estimate(*study.model, study.theta, v.config, data, perturbation);
          rep.norms.push_back(relative_deviation_norm(est.matrix, oracle));
        }
        results[r] = std::move(rep);
      } catch (...) {
        failures[r] = std::current_exception();
        abort = true;
      }
      if (study.progress) {
        std::lock_guard lock(progress_mutex);
        study.progress(++done, total);
      }
    }
  };

  unsigned workers = study.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : study.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t r = 0; r < total; ++r) {
    if (!failures[r]) continue;
    try {
      std::rethrow_exception(failures[r]);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("replication " + std::to_string(r) + ": " + e.what(), e.pivot());
    }
  }

  std::vector<std::string> labels;
  for (const auto& v : study.variants) labels.push_back(v.label);
  StudyResult out;
  out.summary = summarize(results, labels, study.paired, study.setting);
  out.replications = std::move(results);
  return out;
}

}  // namespace fimest
