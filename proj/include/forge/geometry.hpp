#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "forge/error.hpp"

namespace forge {

/// Rounds a normalized coordinate to 3 decimal places, half away from zero.
/// Idempotent: quantize_3dp(quantize_3dp(v)) == quantize_3dp(v).
inline double quantize_3dp(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError("quantize_3dp: value " + std::to_string(v) + " outside [0,1]");
  return static_cast<double>(std::llround(v * 1000.0)) / 1000.0;
}

/// A point in normalized screen coordinates, x and y in [0,1].
struct NormPoint {
  double x = 0.0;
  double y = 0.0;

  bool valid() const { return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0; }
};

inline NormPoint quantize(NormPoint p) { return {quantize_3dp(p.x), quantize_3dp(p.y)}; }

inline bool operator==(NormPoint a, NormPoint b) { return a.x == b.x && a.y == b.y; }

/// An axis-aligned box in normalized coordinates with x0 <= x1, y0 <= y1.
struct NormBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool valid() const {
    return x0 >= 0.0 && x1 <= 1.0 && y0 >= 0.0 && y1 <= 1.0 && x0 <= x1 && y0 <= y1;
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  NormPoint center() const { return {(x0 + x1) * 0.5, (y0 + y1) * 0.5}; }

  bool contains(NormPoint p) const {
    return x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1;
  }
};

inline NormBox quantize(NormBox b) {
  return {quantize_3dp(b.x0), quantize_3dp(b.y0), quantize_3dp(b.x1), quantize_3dp(b.y1)};
}

inline bool operator==(const NormBox& a, const NormBox& b) {
  return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
}

/// Reorders four raw corner values so the result satisfies x0 <= x1, y0 <= y1.
inline NormBox ordered_box(double xa, double ya, double xb, double yb) {
  return {std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb)};
}

/// Intersection area of two boxes; 0 when disjoint.
inline double intersection_area(const NormBox& a, const NormBox& b) {
  double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// Clips a box to the unit square. The result may be degenerate (zero area)
/// when the input lies outside.
inline NormBox clip_unit(const NormBox& b) {
  NormBox r;
  r.x0 = std::clamp(b.x0, 0.0, 1.0);
  r.y0 = std::clamp(b.y0, 0.0, 1.0);
  r.x1 = std::clamp(b.x1, 0.0, 1.0);
  r.y1 = std::clamp(b.y1, 0.0, 1.0);
  if (r.x1 < r.x0) r.x1 = r.x0;
  if (r.y1 < r.y0) r.y1 = r.y0;
  return r;
}

/// Pixel dimensions of a screenshot.
struct ImageSize {
  int width = 0;
  int height = 0;

  bool valid() const { return width >= 1 && height >= 1; }
  std::uint64_t total_pixels() const {
    return static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  }
};

inline bool operator==(ImageSize a, ImageSize b) {
  return a.width == b.width && a.height == b.height;
}

}  // namespace forge
