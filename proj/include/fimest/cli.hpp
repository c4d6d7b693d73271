#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fimest/estimators.hpp"
#include "fimest/model.hpp"
#include "fimest/report.hpp"

namespace fimest::cli {

/// Everything a command needs, after defaults. Settings are addressed as
/// "section.key" (model.*, estimator.*, study.*), both in config files and
/// through --set.
struct CliConfig {
  std::string command;

  // [model]
  std::string model = "signal-plus-noise";
  std::size_t d = 4;
  std::size_t n = 30;
  std::string noise = "random";  // signal-plus-noise: random | zero
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::vector<double>> theta;
  std::vector<double> quadratic_a{2, 0, 0, 4};
  std::size_t oracle_replications = 100000;
  std::uint64_t oracle_seed = 1;
  std::filesystem::path cache_dir = "fimest-cache";

  // [estimator]
  std::vector<Variant> variants{Variant::basic};
  EstimatorConfig estimator;

  // [study]
  std::size_t replications = 50;
  bool paired = true;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  Format format = Format::text;
  std::optional<std::filesystem::path> out;
  std::string setting;
  bool quiet = false;

  /// Keys set explicitly, by file or flag.
  std::set<std::string> explicit_keys;
  /// True when the seed was picked at random because none was given.
  bool seed_chosen = false;
};

struct ModelInfo {
  std::string name;
  std::string description;
};
const std::vector<ModelInfo>& model_catalog();

/// Applies one "section.key" = value pair. Throws ConfigError naming the key
/// and the accepted values.
void apply_setting(CliConfig& config, const std::string& key, const std::string& value);

/// Reads an INI-style file into ordered ("section.key", value) pairs.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Fills in the seed when absent, checks cross-key consistency and runs the
/// estimator capability checks against the model. Throws ConfigError.
void finalize(CliConfig& config);

std::shared_ptr<const Model> build_model(const CliConfig& config);
Vector resolve_theta(const CliConfig& config, const Model& model);
/// Reference FIM: analytic where the model has one, else the cached
/// Monte Carlo approximation for the mixture.
Matrix reference_fim(const CliConfig& config, const Model& model, const Vector& theta);
EstimatorConfig estimator_for(const CliConfig& config, Variant variant);

/// "key: value" lines describing the effective configuration.
std::vector<std::pair<std::string, std::string>> describe(const CliConfig& config);

/// Full command-line entry point. Returns the process exit status:
/// 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fimest::cli
