#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "fimest/cli.hpp"
#include "fimest/errors.hpp"
#include "fimest/models/mixture.hpp"
#include "fimest/models/quadratic.hpp"
#include "fimest/models/scalar_normal.hpp"
#include "fimest/models/signal_plus_noise.hpp"

namespace fimest::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& value, T min) {
  const std::string v = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || out < min)
    throw ConfigError(key + " = '" + value + "': expected an integer >= " + std::to_string(min));
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out))
    throw ConfigError(key + " = '" + value + "': expected a finite number");
  return out;
}

double parse_positive(const std::string& key, const std::string& value) {
  const double v = parse_real(key, value);
  if (!(v > 0.0)) throw ConfigError(key + " = '" + value + "': must be positive");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(key + " = '" + value + "': expected true or false");
}

std::vector<double> parse_reals(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of numbers");
  return out;
}

std::string join(const std::vector<std::string>& xs, const char* sep = ", ") {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : sep) + x;
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

using Setter = std::function<void(CliConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.name",
       [](CliConfig& c, const std::string&, const std::string& v) {
         const std::string name = trim(v);
         for (const auto& m : model_catalog())
           if (m.name == name) {
             c.model = name;
             return;
           }
         std::vector<std::string> names;
         for (const auto& m : model_catalog()) names.push_back(m.name);
         throw ConfigError("model.name = '" + name + "': unknown model; valid: " + join(names));
       }},
      {"model.d", [](CliConfig& c, const std::string& k, const std::string& v) { c.d = parse_integer<std::size_t>(k, v, 1); }},
      {"model.n", [](CliConfig& c, const std::string& k, const std::string& v) { c.n = parse_integer<std::size_t>(k, v, 1); }},
      {"model.noise",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         const std::string s = trim(v);
         if (s != "random" && s != "zero") throw ConfigError(k + " = '" + v + "': valid: random, zero");
         c.noise = s;
       }},
      {"model.noise_seed",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.noise_seed = parse_integer<std::uint64_t>(k, v, 0); }},
      {"model.theta", [](CliConfig& c, const std::string& k, const std::string& v) { c.theta = parse_reals(k, v); }},
      {"model.a", [](CliConfig& c, const std::string& k, const std::string& v) { c.quadratic_a = parse_reals(k, v); }},
      {"model.oracle_replications",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         c.oracle_replications = parse_integer<std::size_t>(k, v, 1);
       }},
      {"model.oracle_seed",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.oracle_seed = parse_integer<std::uint64_t>(k, v, 0); }},
      {"model.cache_dir",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         if (trim(v).empty()) throw ConfigError(k + ": expected a directory path");
         c.cache_dir = trim(v);
       }},
      {"estimator.variant",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         std::vector<Variant> out;
         for (const auto& item : split_list(v)) {
           try {
             out.push_back(parse_variant(item));
           } catch (const ConfigError& e) {
             throw ConfigError(k + ": " + e.what());
           }
         }
         if (out.empty()) throw ConfigError(k + ": expected at least one variant");
         c.variants = out;
       }},
      {"estimator.input_mode",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         try {
           c.estimator.input_mode = parse_input_mode(trim(v));
         } catch (const ConfigError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"estimator.M",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         c.estimator.hessians_per_dataset = parse_integer<std::size_t>(k, v, 1);
       }},
      {"estimator.N",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.estimator.datasets = parse_integer<std::size_t>(k, v, 1); }},
      {"estimator.c", [](CliConfig& c, const std::string& k, const std::string& v) { c.estimator.c = parse_positive(k, v); }},
      {"estimator.c_tilde",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.estimator.c_tilde = parse_positive(k, v); }},
      {"estimator.perturbation",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         try {
           c.estimator.perturbation.kind = parse_perturbation_kind(trim(v));
         } catch (const ConfigError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"estimator.inner",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.estimator.perturbation.inner = parse_positive(k, v); }},
      {"estimator.outer",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.estimator.perturbation.outer = parse_positive(k, v); }},
      {"study.replications",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.replications = parse_integer<std::size_t>(k, v, 2); }},
      {"study.paired", [](CliConfig& c, const std::string& k, const std::string& v) { c.paired = parse_bool(k, v); }},
      {"study.seed", [](CliConfig& c, const std::string& k, const std::string& v) { c.seed = parse_integer<std::uint64_t>(k, v, 0); }},
      {"study.threads",
       [](CliConfig& c, const std::string& k, const std::string& v) { c.threads = parse_integer<unsigned>(k, v, 0); }},
      {"study.format",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         try {
           c.format = parse_format(trim(v));
         } catch (const ConfigError& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"study.out",
       [](CliConfig& c, const std::string& k, const std::string& v) {
         if (trim(v).empty()) throw ConfigError(k + ": expected a file path");
         c.out = trim(v);
       }},
      {"study.setting", [](CliConfig& c, const std::string&, const std::string& v) { c.setting = trim(v); }},
  };
  return table;
}

// Which model each model-specific key belongs to.
const std::map<std::string, std::vector<std::string>>& key_owners() {
  static const std::map<std::string, std::vector<std::string>> owners = {
      {"model.d", {"signal-plus-noise"}},
      {"model.noise", {"signal-plus-noise"}},
      {"model.noise_seed", {"signal-plus-noise"}},
      {"model.n", {"signal-plus-noise", "mixture", "scalar-normal", "scalar-normal-variance"}},
      {"model.a", {"quadratic"}},
      {"model.oracle_replications", {"mixture"}},
      {"model.oracle_seed", {"mixture"}},
      {"model.cache_dir", {"mixture"}},
  };
  return owners;
}

std::vector<std::string> keys_in(const std::string& section) {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters())
    if (k.rfind(section + ".", 0) == 0) out.push_back(k.substr(section.size() + 1));
  return out;
}

}  // namespace

const std::vector<ModelInfo>& model_catalog() {
  static const std::vector<ModelInfo> catalog = {
      {"signal-plus-noise", "z_i ~ N(mu, Sigma + P_i), theta = [mu; vech(Sigma)]; keys d, n, noise, noise_seed"},
      {"mixture", "two-component normal mixture, theta = [lambda, mu1, sigma1, mu2, sigma2]; keys n, oracle_*"},
      {"scalar-normal", "z ~ N(theta, 1), n observations; key n"},
      {"scalar-normal-variance", "z ~ N(0, theta), n observations; key n"},
      {"quadratic", "deterministic 1/2 theta^T A theta (no per-datum access); key a (row-major entries)"},
  };
  return catalog;
}

void apply_setting(CliConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    if (section == "model" || section == "estimator" || section == "study")
      throw ConfigError("unknown key '" + key + "'; valid keys in [" + section + "]: " + join(keys_in(section)));
    throw ConfigError("unknown key '" + key + "'; valid sections: model, estimator, study");
  }
  it->second(config, key, value);
  config.explicit_keys.insert(key);
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    if (!std::filesystem::exists(path)) throw IoError("cannot read config file '" + path.string() + "'");
    throw ConfigError(std::string("config file: ") + e.what());
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config file: key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) out.emplace_back(section + "." + key, value.data());
  }
  return out;
}

void finalize(CliConfig& config) {
  for (const auto& [key, models] : key_owners())
    if (config.explicit_keys.count(key) && std::find(models.begin(), models.end(), config.model) == models.end())
      throw ConfigError(key + " does not apply to model '" + config.model + "'; it is used by: " + join(models));

  if (config.model == "quadratic") {
    const auto p = static_cast<std::size_t>(std::llround(std::sqrt(double(config.quadratic_a.size()))));
    if (p * p != config.quadratic_a.size()) throw ConfigError("model.a: expected p*p entries for a square matrix");
  }
  if (!config.seed) {
    std::random_device rd;
    config.seed = (std::uint64_t(rd()) << 32) ^ rd();
    config.seed_chosen = true;
  }
  config.estimator.seed = *config.seed;
  config.estimator.validate();
  config.estimator.perturbation.validate();

  if (config.command == "estimate" && config.variants.size() != 1)
    throw ConfigError("estimator.variant: estimate runs exactly one variant (got " +
                      std::to_string(config.variants.size()) + ")");
  for (std::size_t i = 0; i < config.variants.size(); ++i)
    for (std::size_t j = i + 1; j < config.variants.size(); ++j)
      if (config.variants[i] == config.variants[j])
        throw ConfigError("estimator.variant: '" + to_string(config.variants[i]) + "' is listed twice");

  const auto model = build_model(config);
  const Vector theta = resolve_theta(config, *model);
  model->check_theta(theta);
  for (Variant v : config.variants) estimator_for(config, v).validate_for(*model);
}

std::shared_ptr<const Model> build_model(const CliConfig& config) {
  if (config.model == "signal-plus-noise") {
    if (config.noise == "zero")
      return std::make_shared<SignalPlusNoiseModel>(config.d, std::vector<Matrix>(config.n, Matrix::Zero(config.d, config.d)));
    const std::uint64_t seed = config.noise_seed.value_or(config.seed.value_or(0));
    return std::make_shared<SignalPlusNoiseModel>(SignalPlusNoiseModel::with_random_noise(config.d, config.n, seed));
  }
  if (config.model == "mixture") return std::make_shared<MixtureModel>(config.n);
  if (config.model == "scalar-normal") return std::make_shared<ScalarNormalModel>(config.n);
  if (config.model == "scalar-normal-variance")
    return std::make_shared<ScalarNormalModel>(config.n, ScalarNormalModel::Parameter::variance);
  if (config.model == "quadratic") {
    const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(double(config.quadratic_a.size()))));
    Matrix a(p, p);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < p; ++c) a(r, c) = config.quadratic_a[static_cast<std::size_t>(r * p + c)];
    if (!is_symmetric(a)) throw ConfigError("model.a: matrix must be symmetric");
    return std::make_shared<QuadraticModel>(a);
  }
  throw ConfigError("unknown model '" + config.model + "'");
}

Vector resolve_theta(const CliConfig& config, const Model& model) {
  const auto p = static_cast<Eigen::Index>(model.dim_theta());
  if (config.theta) {
    if (config.theta->size() != model.dim_theta())
      throw ConfigError("model.theta: model '" + config.model + "' needs " + std::to_string(p) + " entries, got " +
                        std::to_string(config.theta->size()));
    return Eigen::Map<const Vector>(config.theta->data(), p);
  }
  if (config.model == "signal-plus-noise") {
    const auto d = static_cast<Eigen::Index>(config.d);
    Matrix sigma = Matrix::Constant(d, d, 0.5);
    sigma.diagonal().setOnes();
    return theta_pack(Vector::Zero(d), sigma);
  }
  if (config.model == "mixture") {
    Vector t(5);
    t << 0.2, 0.0, 1.0, 4.0, 9.0;
    return t;
  }
  if (config.model == "scalar-normal-variance") return Vector::Ones(1);
  return Vector::Zero(p);
}

Matrix reference_fim(const CliConfig& config, const Model& model, const Vector& theta) {
  if (auto f = model.true_fim(theta)) return *f;
  if (config.model == "mixture")
    return mix_true_fim_cached(theta, config.n, config.oracle_replications, config.oracle_seed, config.cache_dir,
                               config.threads);
  throw ConfigError("model '" + config.model + "' has no reference FIM");
}

EstimatorConfig estimator_for(const CliConfig& config, Variant variant) {
  EstimatorConfig e = config.estimator;
  e.variant = variant;
  return e;
}

std::vector<std::pair<std::string, std::string>> describe(const CliConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("command", c.command);
  out.emplace_back("model.name", c.model);
  if (c.model == "signal-plus-noise") {
    out.emplace_back("model.d", std::to_string(c.d));
    out.emplace_back("model.noise", c.noise);
    if (c.noise == "random") out.emplace_back("model.noise_seed", std::to_string(c.noise_seed.value_or(c.seed.value_or(0))));
  }
  if (c.model != "quadratic") out.emplace_back("model.n", std::to_string(c.n));
  if (c.model == "quadratic") {
    std::vector<std::string> a;
    for (double x : c.quadratic_a) a.push_back(num(x));
    out.emplace_back("model.a", join(a, ","));
  }
  if (c.model == "mixture") {
    out.emplace_back("model.oracle_replications", std::to_string(c.oracle_replications));
    out.emplace_back("model.oracle_seed", std::to_string(c.oracle_seed));
    out.emplace_back("model.cache_dir", c.cache_dir.string());
  }
  if (c.theta) {
    std::vector<std::string> t;
    for (double x : *c.theta) t.push_back(num(x));
    out.emplace_back("model.theta", join(t, ","));
  } else {
    out.emplace_back("model.theta", "default");
  }
  if (c.command == "estimate" || c.command == "study") {
    std::vector<std::string> v;
    for (Variant x : c.variants) v.push_back(to_string(x));
    out.emplace_back("estimator.variant", join(v, ","));
    out.emplace_back("estimator.input_mode", to_string(c.estimator.input_mode));
    out.emplace_back("estimator.M", std::to_string(c.estimator.hessians_per_dataset));
    out.emplace_back("estimator.N", std::to_string(c.estimator.datasets));
    out.emplace_back("estimator.c", num(c.estimator.c));
    if (c.estimator.input_mode == InputMode::loglik_only) out.emplace_back("estimator.c_tilde", num(c.estimator.inner_half_width()));
    out.emplace_back("estimator.perturbation", to_string(c.estimator.perturbation.kind));
    if (c.estimator.perturbation.kind == PerturbationDistribution::Kind::segmented_uniform) {
      out.emplace_back("estimator.inner", num(c.estimator.perturbation.inner));
      out.emplace_back("estimator.outer", num(c.estimator.perturbation.outer));
    }
  }
  if (c.command == "study") {
    out.emplace_back("study.replications", std::to_string(c.replications));
    out.emplace_back("study.paired", c.paired ? "true" : "false");
  }
  if (c.seed)
    out.emplace_back("study.seed", std::to_string(*c.seed) + (c.seed_chosen ? " (chosen; pass --seed to reproduce)" : ""));
  return out;
}

}  // namespace fimest::cli
