#pragma once

// Per-round trace CSV and run summary JSON.
//
// CSV columns: round,gamma,K,cost_round,cost_cumulative,test_accuracy,
//              selected_ids,attention_min,attention_max,attention_entropy
// `selected_ids` is semicolon-joined; an unevaluated round leaves test_accuracy empty.

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "adafl/error.hpp"
#include "adafl/federation.hpp"

namespace adafl {

inline constexpr const char* kTraceHeader =
    "round,gamma,K,cost_round,cost_cumulative,test_accuracy,selected_ids,attention_min,attention_max,"
    "attention_entropy";

/// Shannon entropy (nats) of a probability vector; zero entries contribute nothing.
inline double attention_entropy(const std::vector<double>& scores) {
  double h = 0.0;
  for (double a : scores) {
    if (a > 0.0) h -= a * std::log(a);
  }
  return h;
}

inline void write_trace_csv(std::ostream& out, const std::vector<RoundRecord>& records) {
  out << kTraceHeader << '\n';
  for (const auto& r : records) {
    std::string ids;
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      if (i) ids += ';';
      ids += std::to_string(r.selected[i]);
    }
    const auto [lo, hi] = std::minmax_element(r.attention.begin(), r.attention.end());
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.round, r.gamma, r.cohort, r.cost_round, r.cost_cumulative,
                       r.test_accuracy ? fmt::format("{}", *r.test_accuracy) : std::string{}, ids,
                       r.attention.empty() ? 0.0 : *lo, r.attention.empty() ? 0.0 : *hi,
                       attention_entropy(r.attention));
  }
}

/// One parsed CSV row.
struct TraceRow {
  std::size_t round = 0;
  double gamma = 0.0;
  std::size_t cohort = 0;
  std::size_t cost_round = 0;
  std::size_t cost_cumulative = 0;
  std::optional<double> test_accuracy;
  std::vector<std::size_t> selected;
  double attention_min = 0.0;
  double attention_max = 0.0;
  double attention_entropy = 0.0;
};

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error("trace CSV: missing or unexpected header");
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 10) throw Error("trace CSV line " + std::to_string(line_no) + ": expected 10 columns");
    try {
      TraceRow row;
      row.round = std::stoull(cells[0]);
      row.gamma = std::stod(cells[1]);
      row.cohort = std::stoull(cells[2]);
      row.cost_round = std::stoull(cells[3]);
      row.cost_cumulative = std::stoull(cells[4]);
      if (!cells[5].empty()) row.test_accuracy = std::stod(cells[5]);
      std::istringstream ids(cells[6]);
      std::string id;
      while (std::getline(ids, id, ';')) row.selected.push_back(std::stoull(id));
      row.attention_min = std::stod(cells[7]);
      row.attention_max = std::stod(cells[8]);
      row.attention_entropy = std::stod(cells[9]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw Error("trace CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

}  // namespace adafl
