#pragma once

// Test-side reference implementations. Everything here is written straight
// from first principles (integer arithmetic, rasterization, explicit loops)
// and stays independent of the library code paths it checks.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Decimal rounding via integer arithmetic on micro-units. Valid for inputs
// that are exact multiples of 1e-6; half rounds away from zero.
inline double quantize_3dp_micro(double v) {
  long long micros = std::llround(v * 1e6);
  long long millis = (micros + 500) / 1000;  // v >= 0, so half-up == half-away
  return static_cast<double>(millis) / 1000.0;
}

struct Box {
  double x0, y0, x1, y1;
};

// Coverage score by counting raster cells on a grid x grid lattice. Cell
// centers sit at half-integers, so boxes aligned to 1/grid are counted
// exactly.
inline double coverage_raster(const Box& gt, const std::vector<Box>& dets, int grid = 1000) {
  auto inside = [](double cx, double cy, const Box& b) {
    return b.x0 <= cx && cx <= b.x1 && b.y0 <= cy && cy <= b.y1;
  };
  // Only cells that can touch gt contribute to either count.
  int ix0 = std::max(0, (int)std::floor(gt.x0 * grid) - 1);
  int ix1 = std::min(grid - 1, (int)std::ceil(gt.x1 * grid) + 1);
  int iy0 = std::max(0, (int)std::floor(gt.y0 * grid) - 1);
  int iy1 = std::min(grid - 1, (int)std::ceil(gt.y1 * grid) + 1);
  long long gt_cells = 0;
  long long hit_cells = 0;  // summed over detections independently
  for (int iy = iy0; iy <= iy1; ++iy) {
    double cy = (iy + 0.5) / grid;
    for (int ix = ix0; ix <= ix1; ++ix) {
      double cx = (ix + 0.5) / grid;
      if (!inside(cx, cy, gt)) continue;
      ++gt_cells;
      for (const auto& d : dets)
        if (inside(cx, cy, d)) ++hit_cells;
    }
  }
  if (gt_cells == 0) return 0.0;
  return static_cast<double>(hit_cells) / static_cast<double>(gt_cells);
}

// Fraction of `box` covered by the union of `rects`, rasterized.
inline double union_coverage_raster(const Box& box, const std::vector<Box>& rects,
                                    int grid = 1000) {
  auto inside = [](double cx, double cy, const Box& b) {
    return b.x0 <= cx && cx <= b.x1 && b.y0 <= cy && cy <= b.y1;
  };
  int ix0 = std::max(0, (int)std::floor(box.x0 * grid) - 1);
  int ix1 = std::min(grid - 1, (int)std::ceil(box.x1 * grid) + 1);
  int iy0 = std::max(0, (int)std::floor(box.y0 * grid) - 1);
  int iy1 = std::min(grid - 1, (int)std::ceil(box.y1 * grid) + 1);
  long long box_cells = 0, covered = 0;
  for (int iy = iy0; iy <= iy1; ++iy) {
    double cy = (iy + 0.5) / grid;
    for (int ix = ix0; ix <= ix1; ++ix) {
      double cx = (ix + 0.5) / grid;
      if (!inside(cx, cy, box)) continue;
      ++box_cells;
      for (const auto& r : rects) {
        if (inside(cx, cy, r)) {
          ++covered;
          break;
        }
      }
    }
  }
  if (box_cells == 0) return 0.0;
  return static_cast<double>(covered) / static_cast<double>(box_cells);
}

// ---- layout entropy, straight from the defining equations ----

struct EntropyParams {
  int d = 4;
  int b = 16;
  int m = 8;
  double w_n = 0.5;
  double w_1d = 0.5;
  double w_2d = 0.5;
};

struct Pt {
  double x, y;
};

inline double plogp_entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

inline std::vector<double> h1d_per_direction(const std::vector<Pt>& pts, int d, int b) {
  std::vector<double> out;
  const std::size_t n = pts.size();
  for (int j = 1; j <= d; ++j) {
    double theta = (j - 1) * M_PI / d;
    double s = std::sin(theta), c = std::cos(theta);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = pts[i].x * s + pts[i].y * c;
    double lo = std::min(0.0, s) + std::min(0.0, c);
    double hi = std::max(0.0, s) + std::max(0.0, c);
    std::vector<long long> counts(b, 0);
    for (double v : z) {
      int idx = (int)std::floor((v - lo) / (hi - lo) * b);
      if (idx < 0) idx = 0;
      if (idx >= b) idx = b - 1;
      ++counts[idx];
    }
    std::vector<double> probs;
    for (long long cnt : counts) probs.push_back((double)cnt / (double)n);
    out.push_back(plogp_entropy(probs));
  }
  return out;
}

inline double h2d_dictionary(const std::vector<Pt>& pts, int m) {
  std::map<std::pair<int, int>, long long> cells;
  for (const auto& p : pts) {
    int cx = std::min(m - 1, (int)std::floor(p.x * m));
    int cy = std::min(m - 1, (int)std::floor(p.y * m));
    ++cells[{cx, cy}];
  }
  std::vector<double> probs;
  for (const auto& [cell, cnt] : cells) probs.push_back((double)cnt / (double)pts.size());
  return plogp_entropy(probs);
}

inline double layout_entropy_reference(const std::vector<Pt>& pts, const EntropyParams& p) {
  auto per_dir = h1d_per_direction(pts, p.d, p.b);
  double h1 = 0.0;
  for (double h : per_dir) h1 += h;
  h1 /= p.d;
  double h2 = h2d_dictionary(pts, p.m);
  return std::pow((double)pts.size(), p.w_n) * (p.w_1d * h1 + p.w_2d * h2);
}

// ---- GRPO objective, naive double loop ----

struct RolloutRef {
  std::vector<double> lp_new, lp_old;
  double advantage;
};

inline double grpo_group_naive(const std::vector<RolloutRef>& rollouts, double eps) {
  double total = 0.0;
  long long tokens = 0;
  for (const auto& r : rollouts) tokens += (long long)r.lp_new.size();
  for (const auto& r : rollouts) {
    for (std::size_t t = 0; t < r.lp_new.size(); ++t) {
      double ratio = std::exp(r.lp_new[t] - r.lp_old[t]);
      double clipped = ratio;
      if (clipped < 1.0 - eps) clipped = 1.0 - eps;
      if (clipped > 1.0 + eps) clipped = 1.0 + eps;
      total += std::min(ratio * r.advantage, clipped * r.advantage);
    }
  }
  return total / (double)tokens;
}

}  // namespace oracle
