#pragma once

#include <span>
#include <string>

#include "fimest/study.hpp"

namespace fimest {

enum class Format { text, csv, jsonl };

std::string to_string(Format f);
Format parse_format(const std::string& text);

/// Table of one or more study summaries, one row per summary. All rows must
/// list the same variants. Text output looks like
///
///   Input Information             | basic                   | feedback                | p-value
///   Gradient Function N = 40,000  | 0.0104 [0.0096, 0.0111] | 0.0063 [0.0058, 0.0067] | <1e-10
///
/// CSV and JSON-lines carry the same content as `summary` and `p_value` records.
std::string render_table(std::span<const StudySummary> rows, Format format);
std::string render_table(const StudySummary& summary, Format format);

/// Per-replication records followed by the summary block.
std::string render_results(const StudyResult& result, Format format);

/// Matrix printout used by the CLI (one row per line, space separated).
std::string render_matrix(const Matrix& m);

/// "%.3g" style number as used in the tables.
std::string format_sig3(double v);
std::string format_p_value(double p);

}  // namespace fimest
