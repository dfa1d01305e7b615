#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/parallel.hpp"
#include "forge/sample.hpp"

namespace forge {

enum class CoordinateScale { Normalized01, PixelSpace };

/// A source annotation record after format-specific parsing but before
/// conversion to the unified schema.
struct SourceRecord {
  std::string id;
  std::string image_ref;
  ImageSize image_size;
  std::string raw_instruction;
  std::vector<double> raw_coords;  // 2 (point) or 4 (box), unscaled
  CoordinateScale scale = CoordinateScale::Normalized01;
  std::string source_id;
};

namespace detail {

inline bool is_sep(char c) { return c == ',' || c == ' ' || c == '\t'; }

/// Parses a full numeric token; `offset` locates the token in the input for
/// error messages.
inline double parse_number(const std::string& tok, std::size_t offset) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || tok.empty())
    throw ParseError("non-numeric token '" + tok + "'", offset);
  return v;
}

}  // namespace detail

/// Extracts the four numbers wrapped by one <tag>...</tag> pair, in document
/// order and unscaled. Separators inside the tag are commas or whitespace.
inline std::array<double, 4> parse_tagged_box(const std::string& s) {
  auto open_start = s.find('<');
  if (open_start == std::string::npos) throw ParseError("no opening tag found", 0);
  auto open_end = s.find('>', open_start);
  if (open_end == std::string::npos) throw ParseError("unterminated opening tag", open_start);
  std::string name = s.substr(open_start + 1, open_end - open_start - 1);
  if (name.empty() || name[0] == '/')
    throw ParseError("malformed opening tag '<" + name + ">'", open_start);
  const std::string close = "</" + name + ">";
  auto close_start = s.find(close, open_end + 1);
  if (close_start == std::string::npos)
    throw ParseError("missing closing tag '" + close + "'", open_start);
  std::string inner = s.substr(open_end + 1, close_start - open_end - 1);
  if (inner.find('<') != std::string::npos)
    throw ParseError("nested tag inside '" + name + "' body", open_end + 1 + inner.find('<'));

  std::array<double, 4> out{};
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < inner.size()) {
    while (i < inner.size() && detail::is_sep(inner[i])) ++i;
    if (i >= inner.size()) break;
    std::size_t start = i;
    while (i < inner.size() && !detail::is_sep(inner[i])) ++i;
    if (count == 4)
      throw ParseError("expected 4 numbers, found more", open_end + 1 + start);
    out[count++] = detail::parse_number(inner.substr(start, i - start), open_end + 1 + start);
  }
  if (count != 4)
    throw ParseError("expected 4 numbers, found " + std::to_string(count), open_start);
  return out;
}

/// Converts raw source coordinates to a normalized, quantized annotation.
/// Pixel-space values are divided by the image dimensions; values escaping
/// [0,1] by more than 1e-6 reject the sample rather than being clamped.
inline Annotation normalize_coords(const std::vector<double>& raw, CoordinateScale scale,
                                   ImageSize size) {
  constexpr double kTol = 1e-6;
  if (raw.size() != 2 && raw.size() != 4)
    throw ValidationError("annotation arity must be 2 or 4, got " + std::to_string(raw.size()));
  if (scale == CoordinateScale::PixelSpace && !size.valid())
    throw ValidationError("pixel-space annotation requires a positive image size");
  auto to_unit = [&](double v, int extent) {
    double u = scale == CoordinateScale::PixelSpace ? v / extent : v;
    if (u < 0.0 && u >= -kTol) u = 0.0;
    if (u > 1.0 && u <= 1.0 + kTol) u = 1.0;
    if (u < 0.0 || u > 1.0)
      throw ValidationError("coordinate " + std::to_string(v) +
                            " falls outside [0,1] after normalization");
    return u;
  };
  if (raw.size() == 2)
    return quantize(NormPoint{to_unit(raw[0], size.width), to_unit(raw[1], size.height)});
  return quantize(ordered_box(to_unit(raw[0], size.width), to_unit(raw[1], size.height),
                              to_unit(raw[2], size.width), to_unit(raw[3], size.height)));
}

/// Converts a parsed source record into a unified sample. Task kind follows
/// annotation arity: 4 coordinates make a box task, 2 a point task.
inline GroundingSample reformat_task(const SourceRecord& rec) {
  if (rec.raw_coords.size() != 2 && rec.raw_coords.size() != 4)
    throw ValidationError("record '" + rec.id + "': annotation arity " +
                          std::to_string(rec.raw_coords.size()) + " not in {2,4}");
  GroundingSample s;
  s.id = rec.id;
  s.image_ref = rec.image_ref;
  s.image_size = rec.image_size;
  s.instruction = rec.raw_instruction;
  s.task = rec.raw_coords.size() == 4 ? TaskKind::BoxPrediction
                                      : TaskKind::CenterPointLocalization;
  s.annotation = normalize_coords(rec.raw_coords, rec.scale, rec.image_size);
  s.source = rec.source_id;
  validate(s);
  return s;
}

/// Parses one input line of a particular source family. Adapters are
/// stateless: parse either yields a record or throws a typed error.
struct FormatAdapter {
  std::string name;
  std::function<SourceRecord(const std::string& line)> parse;
};

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

template <typename Fn>
inline SourceRecord guard_json(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

/// Splits one CSV line into fields, honoring double-quoted fields with ""
/// escapes. No embedded newlines (the input is line-oriented).
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line.size());
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

/// JSONL records with a numeric coordinate array:
///   {"id":..., "image":..., "width":..., "height":..., "instruction":...,
///    "annotation":[...], "scale":"normalized"|"pixel", "source":...}
/// `scale` defaults to "normalized"; `source` defaults to the adapter name.
inline FormatAdapter flat_list_adapter() {
  return {"flat-list", [](const std::string& line) {
            auto j = detail::parse_json_line(line);
            return detail::guard_json([&] {
              SourceRecord r;
              r.id = j.at("id").get<std::string>();
              r.image_ref = j.value("image", std::string{});
              r.image_size = {j.at("width").get<int>(), j.at("height").get<int>()};
              r.raw_instruction = j.at("instruction").get<std::string>();
              for (const auto& v : j.at("annotation")) r.raw_coords.push_back(v.get<double>());
              std::string scale = j.value("scale", std::string("normalized"));
              if (scale == "normalized")
                r.scale = CoordinateScale::Normalized01;
              else if (scale == "pixel")
                r.scale = CoordinateScale::PixelSpace;
              else
                throw ParseError("unknown scale '" + scale + "'");
              r.source_id = j.value("source", std::string("flat-list"));
              return r;
            });
          }};
}

/// JSONL records whose annotation is a tag-wrapped pixel string:
///   {"id":..., "image":..., "width":..., "height":..., "instruction":...,
///    "annotation":"<box>10,20,30,40</box>", "source":...}
inline FormatAdapter tagged_adapter() {
  return {"tagged", [](const std::string& line) {
            auto j = detail::parse_json_line(line);
            return detail::guard_json([&] {
              SourceRecord r;
              r.id = j.at("id").get<std::string>();
              r.image_ref = j.value("image", std::string{});
              r.image_size = {j.at("width").get<int>(), j.at("height").get<int>()};
              r.raw_instruction = j.at("instruction").get<std::string>();
              auto corners = parse_tagged_box(j.at("annotation").get<std::string>());
              r.raw_coords.assign(corners.begin(), corners.end());
              r.scale = CoordinateScale::PixelSpace;
              r.source_id = j.value("source", std::string("tagged"));
              return r;
            });
          }};
}

/// CSV rows of pixel tuples, no header:
///   id,image,width,height,instruction,x,y        (point)
///   id,image,width,height,instruction,x0,y0,x1,y1 (box)
/// Instructions containing commas must be double-quoted.
inline FormatAdapter csv_adapter() {
  return {"csv", [](const std::string& line) {
            auto fields = detail::split_csv(line);
            if (fields.size() != 7 && fields.size() != 9)
              throw ParseError("expected 7 or 9 CSV fields, got " +
                               std::to_string(fields.size()));
            SourceRecord r;
            r.id = fields[0];
            r.image_ref = fields[1];
            r.image_size = {static_cast<int>(detail::parse_number(fields[2], 0)),
                            static_cast<int>(detail::parse_number(fields[3], 0))};
            r.raw_instruction = fields[4];
            for (std::size_t i = 5; i < fields.size(); ++i)
              r.raw_coords.push_back(detail::parse_number(fields[i], 0));
            r.scale = CoordinateScale::PixelSpace;
            r.source_id = "csv";
            return r;
          }};
}

inline const std::map<std::string, FormatAdapter>& adapter_registry() {
  static const std::map<std::string, FormatAdapter> registry = {
      {"flat-list", flat_list_adapter()},
      {"tagged", tagged_adapter()},
      {"csv", csv_adapter()},
  };
  return registry;
}

inline const FormatAdapter& find_adapter(const std::string& name) {
  const auto& registry = adapter_registry();
  auto it = registry.find(name);
  if (it == registry.end()) {
    std::string known;
    for (const auto& [key, adapter] : registry) {
      if (!known.empty()) known += ", ";
      known += key;
    }
    throw ValidationError("unknown adapter '" + name + "' (available: " + known + ")");
  }
  return it->second;
}

/// One input record that did not make it into the manifest, and why.
struct RejectionRecord {
  std::size_t line_no = 0;  // 1-based line in the input stream
  std::string id;           // empty when parsing failed before an id was read
  std::string reason;
};

struct IngestResult {
  DatasetManifest manifest;
  std::vector<RejectionRecord> rejections;
  std::size_t input_records = 0;  // always |manifest| + |rejections|
};

/// Runs an adapter over every non-empty input line. Each record lands in
/// exactly one of manifest or rejections; output order matches input order.
inline IngestResult ingest_dataset(const FormatAdapter& adapter, std::istream& in,
                                   unsigned workers = 0) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    lines.emplace_back(line_no, line);
  }
  if (in.bad()) throw IoError("read failure on ingest input");

  using Slot = std::variant<GroundingSample, RejectionRecord>;
  auto process = [&adapter](const std::pair<std::size_t, std::string>& item) -> Slot {
    std::string id;
    try {
      SourceRecord rec = adapter.parse(item.second);
      id = rec.id;
      return reformat_task(rec);
    } catch (const Error& e) {
      return RejectionRecord{item.first, id, e.what()};
    }
  };
  auto slots = parallel_map(lines, process, workers);

  IngestResult result;
  result.input_records = lines.size();
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (auto* sample = std::get_if<GroundingSample>(&slots[i])) {
      if (!seen.insert(sample->id).second) {
        result.rejections.push_back({lines[i].first, sample->id,
                                     "duplicate id '" + sample->id + "' within this ingest run"});
        continue;
      }
      result.manifest.samples.push_back(std::move(*sample));
    } else {
      result.rejections.push_back(std::move(std::get<RejectionRecord>(slots[i])));
    }
  }
  return result;
}

inline std::string rejection_to_jsonl(const RejectionRecord& r) {
  nlohmann::json j;
  j["line"] = r.line_no;
  j["id"] = r.id;
  j["reason"] = r.reason;
  return j.dump();
}

inline void write_rejections(const std::vector<RejectionRecord>& rejections, std::ostream& out) {
  for (const auto& r : rejections) out << rejection_to_jsonl(r) << '\n';
}

inline void write_rejections(const std::vector<RejectionRecord>& rejections,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_rejections(rejections, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace forge
