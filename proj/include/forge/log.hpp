#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace forge {

/// One-line-per-event JSON logger. Keys are emitted in sorted order and no
/// clock is consulted, so identical runs produce identical logs.
class StageLog {
 public:
  StageLog() = default;
  explicit StageLog(std::ostream* out) : out_(out) {}

  using Fields = std::vector<std::pair<std::string, nlohmann::json>>;

  void event(const std::string& stage, const std::string& what, const Fields& fields = {}) {
    if (!out_) return;
    nlohmann::json j;
    j["stage"] = stage;
    j["event"] = what;
    for (const auto& [key, value] : fields) j[key] = value;
    *out_ << j.dump() << '\n';
  }

  bool enabled() const { return out_ != nullptr; }

 private:
  std::ostream* out_ = nullptr;
};

}  // namespace forge
