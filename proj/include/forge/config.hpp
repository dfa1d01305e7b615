#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forge/entropy.hpp"
#include "forge/error.hpp"
#include "forge/filter.hpp"
#include "forge/ingest.hpp"
#include "forge/overlay.hpp"
#include "forge/resolution.hpp"
#include "forge/rlvr.hpp"
#include "forge/simulate.hpp"

namespace forge {

/// One scalar from a config file, kept as raw text until a typed getter
/// interprets it.
struct ConfigValue {
  std::string raw;
  bool quoted = false;
  std::size_t line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Cuts an unquoted `#` comment off the line.
inline std::string strip_comment(const std::string& line) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_quotes = !in_quotes;
    if (c == '#' && !in_quotes) return line.substr(0, i);
  }
  return line;
}

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

inline std::string unescape_quoted(const std::string& body, std::size_t line_no) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\') {
      if (i + 1 >= body.size())
        throw ParseError("config line " + std::to_string(line_no) + ": dangling escape");
      char next = body[++i];
      if (next == '"' || next == '\\')
        out.push_back(next);
      else
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unsupported escape '\\" + std::string(1, next) + "'");
    } else {
      out.push_back(body[i]);
    }
  }
  return out;
}

}  // namespace detail

/// Sectioned key/value file: `[section]` headers, `key = value` scalars,
/// `#` comments. Values are bare tokens or double-quoted strings. Typed
/// getters record every key they touch so a binding step can reject whatever
/// was never consumed, with the full `section.key` path in the message.
class ConfigFile {
 public:
  using Section = std::map<std::string, ConfigValue>;

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    std::size_t line_no = 0;
    std::string current;
    while (std::getline(in, line)) {
      ++line_no;
      std::string body = detail::trim(detail::strip_comment(line));
      if (body.empty()) continue;
      if (body.front() == '[') {
        if (body.back() != ']')
          throw ParseError("config line " + std::to_string(line_no) +
                           ": unterminated section header");
        current = detail::trim(body.substr(1, body.size() - 2));
        if (!detail::valid_name(current))
          throw ParseError("config line " + std::to_string(line_no) +
                           ": bad section name '" + current + "'");
        if (!cfg.sections_.emplace(current, Section{}).second)
          throw ParseError("config line " + std::to_string(line_no) +
                           ": duplicate section [" + current + "]");
        continue;
      }
      auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ParseError("config line " + std::to_string(line_no) +
                         ": expected 'key = value' or '[section]'");
      std::string key = detail::trim(body.substr(0, eq));
      std::string value = detail::trim(body.substr(eq + 1));
      if (!detail::valid_name(key))
        throw ParseError("config line " + std::to_string(line_no) + ": bad key name '" +
                         key + "'");
      if (current.empty())
        throw ParseError("config line " + std::to_string(line_no) + ": key '" + key +
                         "' appears before any [section]");
      ConfigValue v;
      v.line = line_no;
      if (!value.empty() && value.front() == '"') {
        if (value.size() < 2 || value.back() != '"')
          throw ParseError("config line " + std::to_string(line_no) +
                           ": unterminated string value");
        v.raw = detail::unescape_quoted(value.substr(1, value.size() - 2), line_no);
        v.quoted = true;
      } else {
        if (value.empty())
          throw ParseError("config line " + std::to_string(line_no) + ": key '" + key +
                           "' has no value");
        if (value.find_first_of(" \t") != std::string::npos)
          throw ParseError("config line " + std::to_string(line_no) +
                           ": unquoted value contains whitespace; quote it");
        v.raw = value;
      }
      if (!cfg.sections_[current].emplace(key, std::move(v)).second)
        throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" +
                         current + "." + key + "'");
    }
    if (in.bad()) throw IoError("read failure on config input");
    return cfg;
  }

  static ConfigFile parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse(in);
  }

  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }

  const ConfigValue* find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    consumed_.insert(section + "." + key);
    return &k->second;
  }

  std::optional<std::string> get_string(const std::string& section,
                                        const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) return std::nullopt;
    return v->raw;
  }

  std::optional<long long> get_int(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) return std::nullopt;
    if (v->quoted) throw ValidationError(type_error(section, key, *v, "integer"));
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v->raw.data(), v->raw.data() + v->raw.size(), out);
    if (ec != std::errc{} || ptr != v->raw.data() + v->raw.size())
      throw ValidationError(type_error(section, key, *v, "integer"));
    return out;
  }

  std::optional<double> get_double(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) return std::nullopt;
    if (v->quoted) throw ValidationError(type_error(section, key, *v, "number"));
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v->raw.data(), v->raw.data() + v->raw.size(), out);
    if (ec != std::errc{} || ptr != v->raw.data() + v->raw.size())
      throw ValidationError(type_error(section, key, *v, "number"));
    return out;
  }

  std::optional<bool> get_bool(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) return std::nullopt;
    if (!v->quoted && v->raw == "true") return true;
    if (!v->quoted && v->raw == "false") return false;
    throw ValidationError(type_error(section, key, *v, "boolean (true/false)"));
  }

  /// Throws unless every parsed key was consumed by a getter. Call after a
  /// binding step so typos surface with their full path.
  void reject_unconsumed() const {
    for (const auto& [section, keys] : sections_)
      for (const auto& [key, value] : keys)
        if (consumed_.count(section + "." + key) == 0)
          throw ValidationError("config: unknown key '" + section + "." + key + "' (line " +
                                std::to_string(value.line) + ")");
  }

 private:
  static std::string type_error(const std::string& section, const std::string& key,
                                const ConfigValue& v, const std::string& want) {
    return "config: " + section + "." + key + " (line " + std::to_string(v.line) +
           "): expected " + want + ", got '" + v.raw + "'";
  }

  std::map<std::string, Section> sections_;
  mutable std::set<std::string> consumed_;
};

/// Synthesis settings that live outside PlanConfig.
struct SynthConfig {
  std::filesystem::path assets_dir;
  std::filesystem::path backgrounds_dir;
  int k_windows = 3;
  int count = 0;
  PlanConfig plan;

  void validate() const {
    if (k_windows < 0) throw ValidationError("synth: k must be >= 0");
    if (count < 0) throw ValidationError("synth: count must be >= 0");
    plan.validate();
  }
};

/// Everything a pipeline run needs, one section per stage. Defaults match
/// the individual modules; a config file only lists what it overrides.
struct PipelineConfig {
  unsigned worker_count = 0;
  std::uint64_t seed = 1;
  std::filesystem::path work_dir = "forge-out";

  std::string ingest_adapter = "flat-list";
  std::filesystem::path ingest_input;

  FilterConfig filter;
  std::filesystem::path detections_dir;

  EntropyConfig entropy;
  BucketQuantiles quantiles;
  std::filesystem::path elements_dir;

  ResizeMode resize_mode = ResizeMode::Train;
  ResolutionPolicy resolution;

  SynthConfig synth;

  SimConfig sim;
  std::string sim_tasks;  // "synthetic:<n>" or a manifest path; pipeline mode ignores it

  std::filesystem::path eval_bench;
  std::filesystem::path eval_preds;

  void validate() const {
    filter.validate();
    entropy.validate();
    quantiles.validate();
    resolution.validate();
    synth.validate();
    sim.validate();
  }
};

namespace detail {

template <typename T, typename Opt>
void assign(T& slot, const Opt& value) {
  if (value) slot = static_cast<T>(*value);
}

template <typename Validate>
void check_section(const std::string& section, Validate&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    throw ValidationError("config: [" + section + "] " + e.what());
  }
}

}  // namespace detail

/// Binds a parsed file onto defaults. Every key is consumed by name; unknown
/// keys and out-of-range values are rejected here, not at stage run time.
inline PipelineConfig bind_pipeline_config(const ConfigFile& file) {
  PipelineConfig cfg;

  if (auto w = file.get_int("pipeline", "workers")) {
    if (*w < 0) throw ValidationError("config: pipeline.workers must be >= 0");
    cfg.worker_count = static_cast<unsigned>(*w);
  }
  detail::assign(cfg.seed, file.get_int("pipeline", "seed"));
  detail::assign(cfg.work_dir, file.get_string("pipeline", "work_dir"));

  detail::assign(cfg.ingest_adapter, file.get_string("ingest", "adapter"));
  detail::assign(cfg.ingest_input, file.get_string("ingest", "input"));
  detail::check_section("ingest", [&] { find_adapter(cfg.ingest_adapter); });

  detail::assign(cfg.filter.tau, file.get_double("filter", "tau"));
  detail::assign(cfg.filter.side_l, file.get_double("filter", "side_l"));
  detail::assign(cfg.detections_dir, file.get_string("filter", "detections_dir"));
  detail::check_section("filter", [&] { cfg.filter.validate(); });

  detail::assign(cfg.entropy.d, file.get_int("entropy", "d"));
  detail::assign(cfg.entropy.b, file.get_int("entropy", "b"));
  detail::assign(cfg.entropy.m, file.get_int("entropy", "m"));
  detail::assign(cfg.entropy.w_n, file.get_double("entropy", "w_n"));
  detail::assign(cfg.entropy.w_1d, file.get_double("entropy", "w_1d"));
  detail::assign(cfg.entropy.w_2d, file.get_double("entropy", "w_2d"));
  detail::assign(cfg.quantiles.q_easy, file.get_double("entropy", "q_easy"));
  detail::assign(cfg.quantiles.q_hard, file.get_double("entropy", "q_hard"));
  detail::assign(cfg.elements_dir, file.get_string("entropy", "elements_dir"));
  detail::check_section("entropy", [&] {
    cfg.entropy.validate();
    cfg.quantiles.validate();
  });

  if (auto mode = file.get_string("resize", "mode")) {
    if (*mode == "train")
      cfg.resize_mode = ResizeMode::Train;
    else if (*mode == "infer")
      cfg.resize_mode = ResizeMode::Infer;
    else
      throw ValidationError("config: resize.mode must be 'train' or 'infer', got '" + *mode +
                            "'");
  }
  detail::assign(cfg.resolution.train_cap.width, file.get_int("resize", "train_cap_w"));
  detail::assign(cfg.resolution.train_cap.height, file.get_int("resize", "train_cap_h"));
  detail::assign(cfg.resolution.infer_cap.width, file.get_int("resize", "infer_cap_w"));
  detail::assign(cfg.resolution.infer_cap.height, file.get_int("resize", "infer_cap_h"));
  detail::check_section("resize", [&] { cfg.resolution.validate(); });

  detail::assign(cfg.synth.assets_dir, file.get_string("synth", "assets_dir"));
  detail::assign(cfg.synth.backgrounds_dir, file.get_string("synth", "backgrounds_dir"));
  detail::assign(cfg.synth.k_windows, file.get_int("synth", "k"));
  detail::assign(cfg.synth.count, file.get_int("synth", "count"));
  detail::assign(cfg.synth.plan.scale_min, file.get_double("synth", "scale_min"));
  detail::assign(cfg.synth.plan.scale_max, file.get_double("synth", "scale_max"));
  detail::assign(cfg.synth.plan.max_retries, file.get_int("synth", "max_retries"));
  detail::check_section("synth", [&] { cfg.synth.validate(); });

  cfg.sim.seed = cfg.seed;
  detail::assign(cfg.sim.g, file.get_int("rl-sim", "g"));
  detail::assign(cfg.sim.epsilon, file.get_double("rl-sim", "epsilon"));
  detail::assign(cfg.sim.steps, file.get_int("rl-sim", "steps"));
  detail::assign(cfg.sim.seed, file.get_int("rl-sim", "seed"));
  detail::assign(cfg.sim.lr, file.get_double("rl-sim", "lr"));
  detail::assign(cfg.sim.max_step, file.get_double("rl-sim", "max_step"));
  detail::assign(cfg.sim.fd_delta, file.get_double("rl-sim", "fd_delta"));
  detail::assign(cfg.sim.sigma0, file.get_double("rl-sim", "sigma0"));
  detail::assign(cfg.sim.sigma_floor, file.get_double("rl-sim", "sigma_floor"));
  detail::assign(cfg.sim.sigma_max, file.get_double("rl-sim", "sigma_max"));
  detail::assign(cfg.sim.curriculum.pass_rate.low, file.get_double("rl-sim", "pass_low"));
  detail::assign(cfg.sim.curriculum.pass_rate.high, file.get_double("rl-sim", "pass_high"));
  if (auto cur = file.get_string("rl-sim", "curriculum"))
    detail::check_section("rl-sim",
                          [&] { cfg.sim.curriculum.stages = curriculum_from_string(*cur); });
  detail::assign(cfg.sim_tasks, file.get_string("rl-sim", "tasks"));
  detail::check_section("rl-sim", [&] { cfg.sim.validate(); });

  detail::assign(cfg.eval_bench, file.get_string("eval", "bench"));
  detail::assign(cfg.eval_preds, file.get_string("eval", "preds"));

  file.reject_unconsumed();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return bind_pipeline_config(ConfigFile::parse_file(path));
}

}  // namespace forge
