#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/sample.hpp"

namespace forge {

namespace detail {

/// Renders a normalized coordinate with exactly 3 fractional digits.
inline std::string coord_3dp(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string json_quote(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace detail

/// Canonical JSONL encoding of one sample. Field order is fixed and
/// coordinates carry exactly 3 decimals, so re-serialization is byte-stable.
inline std::string to_jsonl(const GroundingSample& s) {
  std::ostringstream out;
  out << "{\"id\":" << detail::json_quote(s.id)
      << ",\"image\":" << detail::json_quote(s.image_ref)
      << ",\"width\":" << s.image_size.width
      << ",\"height\":" << s.image_size.height
      << ",\"task\":\"" << to_string(s.task) << "\""
      << ",\"instruction\":" << detail::json_quote(s.instruction)
      << ",\"annotation\":[";
  if (s.task == TaskKind::BoxPrediction) {
    const auto& b = std::get<NormBox>(s.annotation);
    out << detail::coord_3dp(b.x0) << ',' << detail::coord_3dp(b.y0) << ','
        << detail::coord_3dp(b.x1) << ',' << detail::coord_3dp(b.y1);
  } else {
    const auto& p = std::get<NormPoint>(s.annotation);
    out << detail::coord_3dp(p.x) << ',' << detail::coord_3dp(p.y);
  }
  out << "],\"source\":" << detail::json_quote(s.source) << ",\"tags\":[";
  bool first = true;
  for (const auto& t : s.tags) {  // std::set iterates sorted
    if (!first) out << ',';
    out << detail::json_quote(t);
    first = false;
  }
  out << "]}";
  return out.str();
}

/// Parses one manifest line. `line_no` is 1-based and only used in errors.
inline GroundingSample sample_from_jsonl(const std::string& line, std::size_t line_no = 0) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  auto context = [&] { return "manifest line " + std::to_string(line_no) + ": "; };
  try {
    GroundingSample s;
    s.id = j.at("id").get<std::string>();
    s.image_ref = j.value("image", std::string{});
    s.image_size = {j.at("width").get<int>(), j.at("height").get<int>()};
    s.task = task_from_string(j.at("task").get<std::string>());
    s.instruction = j.at("instruction").get<std::string>();
    const auto& ann = j.at("annotation");
    if (!ann.is_array()) throw ValidationError(context() + "annotation must be an array");
    if (s.task == TaskKind::BoxPrediction) {
      if (ann.size() != 4)
        throw ValidationError(context() + "box task requires 4 annotation values, got " +
                              std::to_string(ann.size()));
      s.annotation = NormBox{ann[0].get<double>(), ann[1].get<double>(),
                             ann[2].get<double>(), ann[3].get<double>()};
    } else {
      if (ann.size() != 2)
        throw ValidationError(context() + "point task requires 2 annotation values, got " +
                              std::to_string(ann.size()));
      s.annotation = NormPoint{ann[0].get<double>(), ann[1].get<double>()};
    }
    s.source = j.value("source", std::string{});
    if (j.contains("tags"))
      for (const auto& t : j.at("tags")) s.tags.insert(t.get<std::string>());
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context() + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(context() + e.what());
  }
}

inline void write_manifest(const DatasetManifest& m, std::ostream& out) {
  m.validate_ids();
  for (const auto& s : m.samples) {
    validate(s);
    out << to_jsonl(s) << '\n';
  }
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_manifest(m, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline DatasetManifest read_manifest(std::istream& in) {
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    m.samples.push_back(sample_from_jsonl(line, line_no));
  }
  m.validate_ids();
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return read_manifest(in);
}

}  // namespace forge
