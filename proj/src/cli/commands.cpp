#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <sstream>

#include "fimest/cli.hpp"
#include "fimest/errors.hpp"
#include "fimest/study.hpp"

namespace fimest::cli {

namespace {

struct Flag {
  const char* names;
  const char* key;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"--model", "model.name", "model name (see list-models)"},
    {"--theta", "model.theta", "evaluation point, comma separated"},
    {"--variant", "estimator.variant", "basic, feedback, indep, feedback_indep (comma list for study)"},
    {"--input-mode", "estimator.input_mode", "gradient or loglik_only"},
    {"-M,--hessians-per-dataset", "estimator.M", "Hessian estimates per pseudo dataset"},
    {"-N,--datasets", "estimator.N", "number of pseudo datasets"},
    {"-c,--perturbation-size", "estimator.c", "perturbation size c"},
    {"--c-tilde", "estimator.c_tilde", "inner perturbation size for loglik_only (default c)"},
    {"--reps", "study.replications", "study replications"},
    {"--seed", "study.seed", "master seed"},
    {"--format", "study.format", "text, csv or jsonl"},
    {"--out", "study.out", "write output to this file instead of stdout"},
    {"--threads", "study.threads", "worker threads (0 = all cores)"},
};

struct RawArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  CLI::Option* paired = nullptr;
  CLI::Option* unpaired = nullptr;
  bool quiet = false;
};

void add_common(CLI::App* cmd, RawArgs& raw, bool estimator_flags) {
  cmd->add_option("--config", raw.config_file, "INI file with [model], [estimator] and [study] sections");
  cmd->add_option("--set", raw.sets, "override one setting, section.key=value (repeatable)");
  for (const Flag& f : kFlags) {
    const std::string key = f.key;
    const bool estimator_only = key.rfind("estimator.", 0) == 0 || key == "study.replications";
    if (estimator_only && !estimator_flags) continue;
    raw.options.emplace_back(key, cmd->add_option(f.names, raw.flags[key], f.help));
  }
  if (estimator_flags) {
    raw.paired = cmd->add_flag("--paired", "share pseudo data across variants (default)");
    raw.unpaired = cmd->add_flag("--unpaired", "independent pseudo data per variant; Welch t-test")->excludes(raw.paired);
  }
  cmd->add_flag("-q,--quiet", raw.quiet, "no progress on standard error");
}

CliConfig assemble(const std::string& command, const RawArgs& raw) {
  CliConfig config;
  config.command = command;
  if (!raw.config_file.empty())
    for (const auto& [k, v] : read_config_file(raw.config_file)) apply_setting(config, k, v);
  for (const auto& s : raw.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set '" + s + "': expected section.key=value");
    apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, opt] : raw.options)
    if (opt->count() > 0) apply_setting(config, key, raw.flags.at(key));
  if (raw.paired && raw.paired->count() > 0) apply_setting(config, "study.paired", "true");
  if (raw.unpaired && raw.unpaired->count() > 0) apply_setting(config, "study.paired", "false");
  config.quiet = raw.quiet;
  finalize(config);
  return config;
}

std::string with_commas(std::size_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

std::string header(const CliConfig& config) {
  const auto lines = describe(config);
  std::ostringstream out;
  if (config.format == Format::jsonl) {
    nlohmann::ordered_json j;
    j["record"] = "config";
    for (const auto& [k, v] : lines) j[k] = v;
    out << j.dump() << '\n';
  } else {
    for (const auto& [k, v] : lines) out << "# " << k << ": " << v << '\n';
  }
  return out.str();
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One matrix as text, long-format CSV or a JSON record.
std::string render_named_matrix(const std::string& record, const std::string& label, const Matrix& m, Format format) {
  std::ostringstream out;
  switch (format) {
    case Format::text:
      out << record << (label.empty() ? "" : " (" + label + ")") << ":\n" << render_matrix(m);
      break;
    case Format::csv:
      out << "record,variant,row,col,value\n";
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          out << record << ',' << label << ',' << r << ',' << c << ',' << full(m(r, c)) << '\n';
      break;
    case Format::jsonl: {
      nlohmann::ordered_json j;
      j["record"] = record;
      if (!label.empty()) j["variant"] = label;
      auto rows = nlohmann::json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
      }
      j["matrix"] = rows;
      out << j.dump() << '\n';
      break;
    }
  }
  return out.str();
}

std::string render_scalar(const std::string& record, double value, Format format) {
  std::ostringstream out;
  switch (format) {
    case Format::text: out << record << ": " << full(value) << '\n'; break;
    case Format::csv: out << record << ",,,," << full(value) << '\n'; break;
    case Format::jsonl: {
      nlohmann::ordered_json j;
      j["record"] = record;
      j["value"] = value;
      out << j.dump() << '\n';
      break;
    }
  }
  return out.str();
}

std::string cmd_estimate(const CliConfig& config) {
  const auto model = build_model(config);
  const Vector theta = resolve_theta(config, *model);
  const EstimatorConfig ec = estimator_for(config, config.variants.front());
  const FimEstimate est = estimate(*model, theta, ec);
  std::string doc = header(config) + render_named_matrix("estimate", to_string(ec.variant), est.matrix, config.format);
  if (model->true_fim(theta) || config.model == "mixture") {
    const Matrix ref = reference_fim(config, *model, theta);
    doc += render_scalar("relative_deviation_norm", relative_deviation_norm(est.matrix, ref), config.format);
  }
  return doc;
}

std::string cmd_oracle(const CliConfig& config) {
  const auto model = build_model(config);
  const Vector theta = resolve_theta(config, *model);
  return header(config) + render_named_matrix("oracle", "", reference_fim(config, *model, theta), config.format);
}

std::string cmd_study(const CliConfig& config, std::ostream& err) {
  StudyConfig study;
  study.model = build_model(config);
  study.theta = resolve_theta(config, *study.model);
  study.oracle = reference_fim(config, *study.model, study.theta);
  study.setting = config.setting;
  if (study.setting.empty())
    study.setting = std::string(config.estimator.input_mode == InputMode::gradient ? "Gradient Function"
                                                                                    : "Log-likelihood Function Only") +
                    " N = " + with_commas(config.estimator.datasets);
  for (Variant v : config.variants) {
    const EstimatorConfig ec = estimator_for(config, v);
    study.variants.push_back({default_label(ec), ec});
  }
  study.replications = config.replications;
  study.paired = config.paired;
  study.seed = *config.seed;
  study.threads = config.threads;
  if (!config.quiet) {
    study.progress = [&err](std::size_t done, std::size_t total) {
      err << "replication " << done << '/' << total << '\n' << std::flush;
    };
  }
  const StudyResult result = run_study(study);
  for (const auto& c : result.summary.comparisons)
    if (c.degenerate)
      err << "fimest: warning: " << c.baseline << " vs " << c.enhanced
          << ": zero variance of differences, p-value from the sign of the mean\n";
  return header(config) + render_results(result, config.format);
}

std::string cmd_list_models() {
  std::ostringstream out;
  for (const auto& m : model_catalog()) out << m.name << "\n    " << m.description << '\n';
  return out.str();
}

void emit(const CliConfig& config, const std::string& doc, std::ostream& out) {
  if (!config.out) {
    out << doc;
    return;
  }
  std::ofstream file(*config.out, std::ios::binary);
  if (!file) throw IoError("cannot open output file '" + config.out->string() + "'");
  file << doc;
  file.close();
  if (!file) throw IoError("failed writing output file '" + config.out->string() + "'");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo estimation of Fisher information matrices", "fimest"};
  app.require_subcommand(1);
  RawArgs est_raw, study_raw, oracle_raw;
  auto* est = app.add_subcommand("estimate", "print one FIM estimate");
  add_common(est, est_raw, true);
  auto* stu = app.add_subcommand("study", "replicated comparison of estimator variants against the reference FIM");
  add_common(stu, study_raw, true);
  auto* ora = app.add_subcommand("oracle", "print the reference FIM");
  add_common(ora, oracle_raw, false);
  auto* lst = app.add_subcommand("list-models", "list the available models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (lst->parsed()) {
      out << cmd_list_models();
      return 0;
    }
    const std::string command = est->parsed() ? "estimate" : stu->parsed() ? "study" : "oracle";
    const RawArgs& raw = est->parsed() ? est_raw : stu->parsed() ? study_raw : oracle_raw;
    const CliConfig config = assemble(command, raw);
    std::string doc;
    if (command == "estimate") doc = cmd_estimate(config);
    if (command == "study") doc = cmd_study(config, err);
    if (command == "oracle") doc = cmd_oracle(config);
    emit(config, doc, out);
    return 0;
  } catch (const IoError& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 3;
  } catch (const NotPositiveDefinite& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "fimest: error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace fimest::cli
