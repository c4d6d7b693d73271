#include "fimest/report.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "fimest/errors.hpp"

namespace fimest {

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

constexpr const char* kCsvHeader = "record,setting,replication,variant,baseline,value,ci_lower,ci_upper\n";

void check_rows(std::span<const StudySummary> rows) {
  if (rows.empty()) throw InvalidInput("render_table: no study rows");
  for (const auto& row : rows) {
    if (row.variants.empty()) throw InvalidInput("render_table: study has no variants");
    if (row.variants.size() != rows.front().variants.size())
      throw InvalidInput("render_table: rows list different variants");
    for (std::size_t v = 0; v < row.variants.size(); ++v)
      if (row.variants[v].label != rows.front().variants[v].label)
        throw InvalidInput("render_table: rows list different variants");
  }
}

std::string pad(const std::string& s, std::size_t width) { return s + std::string(width - std::min(width, s.size()), ' '); }

std::string text_table(std::span<const StudySummary> rows) {
  const StudySummary& first = rows.front();
  std::vector<std::string> header{"Input Information"};
  for (const auto& v : first.variants) header.push_back(v.label);
  if (first.comparisons.size() == 1) {
    header.push_back("p-value");
  } else {
    for (const auto& c : first.comparisons) header.push_back("p(" + c.baseline + ">" + c.enhanced + ")");
  }

  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    std::vector<std::string> line{row.setting.empty() ? "-" : row.setting};
    for (const auto& v : row.variants)
      line.push_back(format_sig3(v.mean) + " [" + format_sig3(v.lower) + ", " + format_sig3(v.upper) + "]");
    for (const auto& c : row.comparisons) line.push_back(format_p_value(c.p_value));
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& line : cells) width[c] = std::max(width[c], line.at(c).size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) out << " | ";
      out << (c + 1 == line.size() ? line[c] : pad(line[c], width[c]));
    }
    out << '\n';
  };
  emit(header);
  for (const auto& line : cells) emit(line);
  const StudySummary& tail = rows.back();
  out << "Mean relative deviation norm with " << (tail.replications) << "-run 95% t-interval; one-sided "
      << (tail.paired ? "paired" : "Welch") << " t-test p-values.\n";
  return out.str();
}

void csv_summary(std::ostringstream& out, const StudySummary& s) {
  for (const auto& v : s.variants)
    out << "summary," << csv_field(s.setting) << ",," << csv_field(v.label) << ",," << format_full(v.mean) << ','
        << format_full(v.lower) << ',' << format_full(v.upper) << '\n';
  for (const auto& c : s.comparisons)
    out << "p_value," << csv_field(s.setting) << ",," << csv_field(c.enhanced) << ',' << csv_field(c.baseline) << ','
        << format_full(c.p_value) << ",,\n";
}

void jsonl_summary(std::ostringstream& out, const StudySummary& s) {
  for (const auto& v : s.variants) {
    nlohmann::ordered_json j;
    j["record"] = "summary";
    j["setting"] = s.setting;
    j["variant"] = v.label;
    j["mean"] = v.mean;
    j["ci_lower"] = v.lower;
    j["ci_upper"] = v.upper;
    j["replications"] = s.replications;
    out << j.dump() << '\n';
  }
  for (const auto& c : s.comparisons) {
    nlohmann::ordered_json j;
    j["record"] = "p_value";
    j["setting"] = s.setting;
    j["baseline"] = c.baseline;
    j["enhanced"] = c.enhanced;
    j["p_value"] = c.p_value;
    j["paired"] = s.paired;
    out << j.dump() << '\n';
  }
}

}  // namespace

std::string to_string(Format f) {
  switch (f) {
    case Format::text: return "text";
    case Format::csv: return "csv";
    case Format::jsonl: return "jsonl";
  }
  return "unknown";
}

Format parse_format(const std::string& text) {
  if (text == "text") return Format::text;
  if (text == "csv") return Format::csv;
  if (text == "jsonl" || text == "json-lines") return Format::jsonl;
  throw ConfigError("unknown format '" + text + "'; valid: text, csv, jsonl");
}

std::string format_sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string format_p_value(double p) {
  if (p < 1e-10) return "<1e-10";
  return format_sig3(p);
}

std::string render_table(std::span<const StudySummary> rows, Format format) {
  check_rows(rows);
  std::ostringstream out;
  switch (format) {
    case Format::text: return text_table(rows);
    case Format::csv:
      out << kCsvHeader;
      for (const auto& row : rows) csv_summary(out, row);
      return out.str();
    case Format::jsonl:
      for (const auto& row : rows) jsonl_summary(out, row);
      return out.str();
  }
  return {};
}

std::string render_table(const StudySummary& summary, Format format) {
  return render_table(std::span<const StudySummary>(&summary, 1), format);
}

std::string render_results(const StudyResult& result, Format format) {
  const StudySummary& s = result.summary;
  check_rows(std::span<const StudySummary>(&s, 1));
  std::ostringstream out;
  switch (format) {
    case Format::text: {
      for (const auto& r : result.replications) {
        out << "replication " << r.replication;
        for (std::size_t v = 0; v < r.norms.size(); ++v)
          out << "  " << s.variants[v].label << '=' << format_full(r.norms[v]);
        out << '\n';
      }
      out << '\n' << render_table(s, Format::text);
      break;
    }
    case Format::csv:
      out << kCsvHeader;
      for (const auto& r : result.replications)
        for (std::size_t v = 0; v < r.norms.size(); ++v)
          out << "replication," << csv_field(s.setting) << ',' << r.replication << ',' << csv_field(s.variants[v].label)
              << ",," << format_full(r.norms[v]) << ",,\n";
      csv_summary(out, s);
      break;
    case Format::jsonl:
      for (const auto& r : result.replications)
        for (std::size_t v = 0; v < r.norms.size(); ++v) {
          nlohmann::ordered_json j;
          j["record"] = "replication";
          j["setting"] = s.setting;
          j["replication"] = r.replication;
          j["variant"] = s.variants[v].label;
          j["relative_norm"] = r.norms[v];
          out << j.dump() << '\n';
        }
      jsonl_summary(out, s);
      break;
  }
  return out.str();
}

std::string render_matrix(const Matrix& m) {
  std::ostringstream out;
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g", m(r, c));
      out << (c == 0 ? "" : " ") << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace fimest
