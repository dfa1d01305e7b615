#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/filter.hpp"
#include "forge/geometry.hpp"
#include "forge/sample.hpp"

namespace forge {

struct EntropyConfig {
  int d = 4;   // projection directions
  int b = 16;  // 1D histogram bins
  int m = 8;   // 2D grid side (m*m cells)
  double w_n = 0.5;
  double w_1d = 0.5;
  double w_2d = 0.5;

  void validate() const {
    if (d < 1) throw ValidationError("entropy: d must be >= 1, got " + std::to_string(d));
    if (b < 2) throw ValidationError("entropy: b must be >= 2, got " + std::to_string(b));
    if (m < 2) throw ValidationError("entropy: m must be >= 2, got " + std::to_string(m));
    if (w_n < 0.0 || w_1d < 0.0 || w_2d < 0.0)
      throw ValidationError("entropy: weights must be nonnegative");
    if (!(w_1d + w_2d > 0.0))
      throw ValidationError("entropy: w_1d + w_2d must be positive");
  }
};

enum class Bucket { Easy, Medium, Hard };

inline const char* bucket_name(Bucket b) {
  switch (b) {
    case Bucket::Easy: return "easy";
    case Bucket::Medium: return "medium";
    default: return "hard";
  }
}

inline Bucket bucket_from_string(const std::string& s) {
  if (s == "easy") return Bucket::Easy;
  if (s == "medium") return Bucket::Medium;
  if (s == "hard") return Bucket::Hard;
  throw ValidationError("unknown difficulty bucket '" + s + "'");
}

/// Per-image layout-entropy decomposition. The bucket stays empty until a
/// dataset-level bucketing pass assigns it.
struct EntropyReport {
  std::string image_id;
  std::size_t n = 0;  // element count
  std::vector<double> h1d_per_direction;
  double h1d_avg = 0.0;
  double h2d = 0.0;
  double e_layout = 0.0;
  std::optional<Bucket> bucket;
  std::uint64_t total_pixels = 0;
  bool degenerate = false;  // no centers were available
};

/// Projection of a center onto direction theta: z = x*sin(theta) + y*cos(theta).
/// theta = 0 is the vertical reference direction (z = y).
inline double project_center(NormPoint p, double theta) {
  return p.x * std::sin(theta) + p.y * std::cos(theta);
}

namespace detail {

/// Shannon entropy (nats) of a histogram given as occupancy counts summing
/// to n. Equal occupancy across the K occupied bins short-circuits to log K,
/// keeping the degenerate (0) and uniform (log B, log M^2) extremes exact.
inline double entropy_from_counts(const std::vector<long long>& counts, long long n) {
  long long occupied = 0;
  long long first = 0;
  bool uniform = true;
  for (long long c : counts) {
    if (c <= 0) continue;
    if (occupied == 0)
      first = c;
    else if (c != first)
      uniform = false;
    ++occupied;
  }
  if (occupied == 0) return 0.0;
  if (uniform) return std::log(static_cast<double>(occupied));
  double h = 0.0;
  for (long long c : counts)
    if (c > 0) h += static_cast<double>(c) * std::log(static_cast<double>(n) / c);
  return h / static_cast<double>(n);
}

}  // namespace detail

/// Entropy of `values` histogrammed into `bins` equal-width intervals over
/// [lo, hi]; values at the boundaries fall into the clamping edge bins.
inline double histogram_entropy(const std::vector<double>& values, double lo, double hi,
                                int bins) {
  if (values.empty()) throw ValidationError("histogram_entropy: empty value list");
  if (!(hi > lo)) throw ValidationError("histogram_entropy: empty value range");
  if (bins < 1) throw ValidationError("histogram_entropy: bins must be >= 1");
  std::vector<long long> counts(bins, 0);
  for (double v : values) {
    int idx = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    idx = std::clamp(idx, 0, bins - 1);
    ++counts[idx];
  }
  return detail::entropy_from_counts(counts, static_cast<long long>(values.size()));
}

struct H1dResult {
  std::vector<double> per_direction;
  double mean = 0.0;
};

/// Per-direction 1D projection entropies and their mean. Direction j (1-based)
/// uses theta_j = (j-1)*pi/D; each histogram spans that direction's achievable
/// projection range, so a uniform layout can reach near-maximal entropy in
/// every direction.
inline H1dResult h1d_avg(const std::vector<NormPoint>& centers, const EntropyConfig& cfg) {
  cfg.validate();
  if (centers.empty()) throw ValidationError("h1d_avg: empty center list");
  H1dResult r;
  for (int j = 1; j <= cfg.d; ++j) {
    double theta = (j - 1) * M_PI / cfg.d;
    double s = std::sin(theta), c = std::cos(theta);
    std::vector<double> z;
    z.reserve(centers.size());
    for (const auto& p : centers) z.push_back(p.x * s + p.y * c);
    double lo = std::min(0.0, s) + std::min(0.0, c);
    double hi = std::max(0.0, s) + std::max(0.0, c);
    r.per_direction.push_back(histogram_entropy(z, lo, hi, cfg.b));
  }
  double sum = 0.0;
  for (double h : r.per_direction) sum += h;
  r.mean = sum / cfg.d;
  return r;
}

/// Entropy of the center distribution over an M x M partition of the screen.
/// The cell of (x, y) is (floor(x*M), floor(y*M)), capped at M-1 so x = 1 or
/// y = 1 stays inside the grid.
inline double h2d_grid(const std::vector<NormPoint>& centers, int m) {
  if (centers.empty()) throw ValidationError("h2d_grid: empty center list");
  if (m < 2) throw ValidationError("h2d_grid: m must be >= 2");
  std::vector<long long> counts(static_cast<std::size_t>(m) * m, 0);
  for (const auto& p : centers) {
    int cx = std::min(m - 1, static_cast<int>(std::floor(p.x * m)));
    int cy = std::min(m - 1, static_cast<int>(std::floor(p.y * m)));
    ++counts[static_cast<std::size_t>(cy) * m + cx];
  }
  return detail::entropy_from_counts(counts, static_cast<long long>(centers.size()));
}

/// Full layout-entropy report for one screen:
///   E = N^w_n * (w_1d * mean 1D entropy + w_2d * 2D grid entropy).
/// An empty center list produces a degenerate report with E = 0.
inline EntropyReport layout_entropy(const std::vector<NormPoint>& centers,
                                    const std::string& image_id, ImageSize size,
                                    const EntropyConfig& cfg) {
  cfg.validate();
  EntropyReport rep;
  rep.image_id = image_id;
  rep.n = centers.size();
  rep.total_pixels = size.valid() ? size.total_pixels() : 0;
  if (centers.empty()) {
    rep.h1d_per_direction.assign(cfg.d, 0.0);
    rep.degenerate = true;
    return rep;
  }
  auto h1 = h1d_avg(centers, cfg);
  rep.h1d_per_direction = std::move(h1.per_direction);
  rep.h1d_avg = h1.mean;
  rep.h2d = h2d_grid(centers, cfg.m);
  rep.e_layout = std::pow(static_cast<double>(rep.n), cfg.w_n) *
                 (cfg.w_1d * rep.h1d_avg + cfg.w_2d * rep.h2d);
  return rep;
}

/// Secondary curation key: total pixels W*H, preferring information-dense
/// screens at equal complexity.
inline std::uint64_t resolution_priority(ImageSize size) {
  if (!size.valid()) throw ValidationError("resolution_priority: invalid image size");
  return size.total_pixels();
}

struct BucketQuantiles {
  double q_easy = 1.0 / 3.0;
  double q_hard = 2.0 / 3.0;

  void validate() const {
    if (!(0.0 < q_easy && q_easy < q_hard && q_hard < 1.0))
      throw ValidationError("bucketing requires 0 < q_easy < q_hard < 1");
  }
};

/// Assigns Easy/Medium/Hard by nearest-rank quantiles of E_layout.
/// Thresholds come from a stable sort on (E, image_id); a report is Easy when
/// E <= the q_easy threshold, Hard when E > the q_hard threshold, Medium
/// otherwise, so ties at a boundary all land in the lower bucket. Output
/// order matches input order.
inline std::vector<EntropyReport> bucket_dataset(std::vector<EntropyReport> reports,
                                                 BucketQuantiles q = {}) {
  q.validate();
  if (reports.empty()) throw ValidationError("bucket_dataset: no reports");
  std::vector<const EntropyReport*> sorted;
  sorted.reserve(reports.size());
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->e_layout != b->e_layout) return a->e_layout < b->e_layout;
    return a->image_id < b->image_id;
  });
  auto rank = [n = reports.size()](double quantile) {
    auto k = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
  };
  double t_easy = sorted[rank(q.q_easy) - 1]->e_layout;
  double t_hard = sorted[rank(q.q_hard) - 1]->e_layout;
  for (auto& r : reports) {
    if (r.e_layout <= t_easy)
      r.bucket = Bucket::Easy;
    else if (r.e_layout > t_hard)
      r.bucket = Bucket::Hard;
    else
      r.bucket = Bucket::Medium;
  }
  return reports;
}

/// Centers used for entropy: detected element box centers.
inline std::vector<NormPoint> centers_from_detections(const DetectionSet& dets) {
  std::vector<NormPoint> out;
  out.reserve(dets.boxes.size());
  for (const auto& b : dets.boxes) out.push_back(b.center());
  return out;
}

inline nlohmann::json report_to_json(const EntropyReport& r) {
  nlohmann::json j;
  j["image_id"] = r.image_id;
  j["n"] = r.n;
  j["h1d_per_direction"] = r.h1d_per_direction;
  j["h1d_avg"] = r.h1d_avg;
  j["h2d"] = r.h2d;
  j["e_layout"] = r.e_layout;
  if (r.bucket) j["bucket"] = bucket_name(*r.bucket);
  j["total_pixels"] = r.total_pixels;
  j["degenerate"] = r.degenerate;
  return j;
}

inline EntropyReport report_from_json(const nlohmann::json& j) {
  try {
    EntropyReport r;
    r.image_id = j.at("image_id").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.h1d_per_direction = j.at("h1d_per_direction").get<std::vector<double>>();
    r.h1d_avg = j.at("h1d_avg").get<double>();
    r.h2d = j.at("h2d").get<double>();
    r.e_layout = j.at("e_layout").get<double>();
    if (j.contains("bucket")) r.bucket = bucket_from_string(j.at("bucket").get<std::string>());
    r.total_pixels = j.value("total_pixels", std::uint64_t{0});
    r.degenerate = j.value("degenerate", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("entropy report: ") + e.what());
  }
}

}  // namespace forge
