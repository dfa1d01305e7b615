#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/manifest_io.hpp"
#include "forge/parallel.hpp"
#include "forge/rlvr.hpp"

namespace forge {

/// One benchmark ground-truth entry with its category labels, e.g.
/// {platform: "Desktop", element: "Icon"}.
struct BenchRecord {
  std::string id;
  NormBox target;
  std::map<std::string, std::string> categories;
};

inline void validate(const BenchRecord& r) {
  if (r.id.empty()) throw ValidationError("bench record has empty id");
  if (!r.target.valid())
    throw ValidationError("bench record '" + r.id + "': target outside [0,1] or misordered");
  if (r.categories.empty())
    throw ValidationError("bench record '" + r.id + "': at least one category axis required");
  for (const auto& [axis, label] : r.categories)
    if (axis.empty() || label.empty())
      throw ValidationError("bench record '" + r.id + "': empty category axis or label");
}

struct Prediction {
  std::string id;
  NormPoint point;
};

/// Canonical cell name: axis=label pairs joined by '|', axes sorted.
inline std::string cell_key(const std::map<std::string, std::string>& categories) {
  std::string key;
  for (const auto& [axis, label] : categories) {
    if (!key.empty()) key += '|';
    key += axis + "=" + label;
  }
  return key;
}

struct CellStats {
  std::size_t total = 0;
  std::size_t hits = 0;

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

struct ScoreTable {
  std::map<std::string, CellStats> cells;  // keyed by cell_key
  std::size_t total_records = 0;
  std::size_t total_hits = 0;

  /// Unweighted mean of cell accuracies — the headline "Avg." column.
  double macro_average() const {
    if (cells.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [key, stats] : cells) sum += stats.accuracy();
    return sum / static_cast<double>(cells.size());
  }

  /// Hits over records, each sample weighted equally.
  double micro_average() const {
    return total_records == 0
               ? 0.0
               : static_cast<double>(total_hits) / static_cast<double>(total_records);
  }
};

/// Scores predictions against the benchmark: a record counts as correct iff
/// its prediction exists and lands inside the target box (edges inclusive).
/// Records without a prediction count as wrong.
inline ScoreTable score(const std::vector<BenchRecord>& bench,
                        const std::vector<Prediction>& preds, int workers = 0) {
  std::map<std::string, const Prediction*> by_id;
  std::set<std::string> bench_ids;
  for (const auto& r : bench) {
    validate(r);
    if (!bench_ids.insert(r.id).second)
      throw ValidationError("score: duplicate benchmark id '" + r.id + "'");
  }
  std::vector<std::string> unknown;
  for (const auto& p : preds) {
    if (!bench_ids.count(p.id)) {
      unknown.push_back(p.id);
      continue;
    }
    if (!by_id.emplace(p.id, &p).second)
      throw ValidationError("score: duplicate prediction id '" + p.id + "'");
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::string joined;
    for (const auto& id : unknown) {
      if (!joined.empty()) joined += ", ";
      joined += id;
    }
    throw ValidationError("score: predictions for unknown benchmark ids: " + joined);
  }

  std::vector<int> hit = parallel_map(
      bench,
      [&](const BenchRecord& r) {
        auto it = by_id.find(r.id);
        if (it == by_id.end()) return 0;
        return binary_reward(it->second->point, r.target) > 0.5 ? 1 : 0;
      },
      workers);

  ScoreTable table;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    CellStats& cell = table.cells[cell_key(bench[i].categories)];
    cell.total += 1;
    cell.hits += static_cast<std::size_t>(hit[i]);
    table.total_records += 1;
    table.total_hits += static_cast<std::size_t>(hit[i]);
  }
  return table;
}

struct RenderedTable {
  std::string text;  // aligned wide table, one column per cell
  std::string csv;   // long form: one row per cell, averages last
};

namespace detail {

inline std::string percent_1dp(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

inline std::string fraction_9g(double fraction) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", fraction);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace detail

/// Renders the score table deterministically: cells in sorted key order,
/// the two "Avg." columns last.
inline RenderedTable render_table(const ScoreTable& table) {
  if (table.cells.empty()) throw ValidationError("render_table: empty table");
  std::vector<std::string> headers;
  std::vector<std::string> values;
  for (const auto& [key, stats] : table.cells) {
    headers.push_back(key);
    values.push_back(detail::percent_1dp(stats.accuracy()));
  }
  headers.push_back("Avg. (macro)");
  values.push_back(detail::percent_1dp(table.macro_average()));
  headers.push_back("Avg. (micro)");
  values.push_back(detail::percent_1dp(table.micro_average()));

  RenderedTable out;
  std::string header_line, value_line;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    std::size_t width = std::max(headers[i].size(), values[i].size());
    if (i) {
      header_line += "  ";
      value_line += "  ";
    }
    header_line += std::string(width - headers[i].size(), ' ') + headers[i];
    value_line += std::string(width - values[i].size(), ' ') + values[i];
  }
  out.text = header_line + "\n" + value_line + "\n";

  out.csv = "cell,hits,total,accuracy\n";
  for (const auto& [key, stats] : table.cells) {
    out.csv += detail::csv_field(key);
    out.csv += "," + std::to_string(stats.hits) + "," + std::to_string(stats.total) +
               "," + detail::fraction_9g(stats.accuracy()) + "\n";
  }
  out.csv += "Avg. (macro),,," + detail::fraction_9g(table.macro_average()) + "\n";
  out.csv += "Avg. (micro)," + std::to_string(table.total_hits) + "," +
             std::to_string(table.total_records) + "," +
             detail::fraction_9g(table.micro_average()) + "\n";
  return out;
}

inline std::string bench_to_jsonl(const BenchRecord& r) {
  validate(r);
  std::string out = "{\"id\":" + detail::json_quote(r.id) + ",\"target\":[" +
                    detail::coord_3dp(r.target.x0) + "," + detail::coord_3dp(r.target.y0) +
                    "," + detail::coord_3dp(r.target.x1) + "," +
                    detail::coord_3dp(r.target.y1) + "],\"categories\":{";
  bool first = true;
  for (const auto& [axis, label] : r.categories) {
    if (!first) out += ",";
    first = false;
    out += detail::json_quote(axis) + ":" + detail::json_quote(label);
  }
  out += "}}";
  return out;
}

inline BenchRecord bench_from_jsonl(const std::string& line, std::size_t line_no = 0) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bench line " + std::to_string(line_no) + ": " + e.what());
  }
  try {
    BenchRecord r;
    r.id = doc.at("id").get<std::string>();
    const auto& t = doc.at("target");
    if (!t.is_array() || t.size() != 4)
      throw ValidationError("bench record '" + r.id + "': target must have 4 numbers");
    r.target = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>(),
                t[3].get<double>()};
    for (const auto& [axis, label] : doc.at("categories").items())
      r.categories[axis] = label.get<std::string>();
    validate(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bench line " + std::to_string(line_no) + ": " + e.what());
  }
}

inline std::string prediction_to_jsonl(const Prediction& p) {
  return "{\"id\":" + detail::json_quote(p.id) + ",\"point\":[" +
         detail::coord_3dp(p.point.x) + "," + detail::coord_3dp(p.point.y) + "]}";
}

inline Prediction prediction_from_jsonl(const std::string& line, std::size_t line_no = 0) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("prediction line " + std::to_string(line_no) + ": " + e.what());
  }
  try {
    Prediction p;
    p.id = doc.at("id").get<std::string>();
    const auto& pt = doc.at("point");
    if (!pt.is_array() || pt.size() != 2)
      throw ValidationError("prediction '" + p.id + "': point must have 2 numbers");
    p.point = {pt[0].get<double>(), pt[1].get<double>()};
    if (p.id.empty()) throw ValidationError("prediction has empty id");
    if (!p.point.valid())
      throw ValidationError("prediction '" + p.id + "': point outside [0,1]");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("prediction line " + std::to_string(line_no) + ": " + e.what());
  }
}

inline std::vector<BenchRecord> read_bench(std::istream& in) {
  std::vector<BenchRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(bench_from_jsonl(line, line_no));
  }
  return records;
}

inline std::vector<BenchRecord> read_bench(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_bench(in);
}

inline std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    preds.push_back(prediction_from_jsonl(line, line_no));
  }
  return preds;
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_predictions(in);
}

inline void write_bench(const std::vector<BenchRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << bench_to_jsonl(r) << "\n";
}

inline void write_bench(const std::vector<BenchRecord>& records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_bench(records, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_predictions(const std::vector<Prediction>& preds, std::ostream& out) {
  for (const auto& p : preds) out << prediction_to_jsonl(p) << "\n";
}

inline void write_predictions(const std::vector<Prediction>& preds,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_predictions(preds, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace forge
