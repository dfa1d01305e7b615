#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>

#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/sample.hpp"

namespace forge {

/// Per-dimension pixel caps for training and inference images.
struct ResolutionPolicy {
  ImageSize train_cap{3072, 3072};
  ImageSize infer_cap{2000, 2000};

  void validate() const {
    if (!train_cap.valid() || !infer_cap.valid())
      throw ValidationError("resolution: caps must be positive");
  }
};

enum class ResizeMode { Train, Infer };

struct ResizeResult {
  ImageSize size;
  double scale = 1.0;  // 1.0 means the image was already under the cap
};

/// Aspect-preserving downscale to fit a per-dimension cap. Images under the
/// cap pass through untouched. The binding dimension lands exactly on its
/// cap; the other is floor(scale * dim), computed in integer arithmetic so
/// exact rationals like 1/3 never floor one pixel short.
inline ResizeResult cap_resize(ImageSize size, ImageSize cap) {
  if (!size.valid()) throw ValidationError("cap_resize: invalid image size");
  if (!cap.valid()) throw ValidationError("cap_resize: invalid cap");
  if (size.width <= cap.width && size.height <= cap.height) return {size, 1.0};

  std::int64_t w = size.width, h = size.height;
  std::int64_t cw = cap.width, ch = cap.height;
  ImageSize out;
  double scale;
  if (cw * h <= ch * w) {  // width ratio binds: cw/w <= ch/h
    out.width = static_cast<int>(std::max<std::int64_t>(1, cw));
    out.height = static_cast<int>(std::max<std::int64_t>(1, (h * cw) / w));
    scale = static_cast<double>(cw) / static_cast<double>(w);
  } else {
    out.height = static_cast<int>(std::max<std::int64_t>(1, ch));
    out.width = static_cast<int>(std::max<std::int64_t>(1, (w * ch) / h));
    scale = static_cast<double>(ch) / static_cast<double>(h);
  }
  return {out, scale};
}

/// Scales a pixel-space box by a resize factor (pixel payloads must follow
/// the image; normalized data never changes).
struct PixelBox {
  double x0, y0, x1, y1;
};

inline PixelBox scale_pixel_box(const PixelBox& b, double scale) {
  return {b.x0 * scale, b.y0 * scale, b.x1 * scale, b.y1 * scale};
}

namespace detail {

inline std::string resize_tag(double scale) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "resized:%.6g", scale);
  return buf;
}

}  // namespace detail

/// Applies the mode's cap to a sample. Normalized annotations are scale-free
/// and stay bit-identical. An actual resize is recorded as a stage tag; the
/// identity case adds nothing, so applying a policy twice equals applying it
/// once.
inline GroundingSample apply_policy(GroundingSample s, ResizeMode mode,
                                    const ResolutionPolicy& policy) {
  policy.validate();
  ImageSize cap = mode == ResizeMode::Train ? policy.train_cap : policy.infer_cap;
  auto r = cap_resize(s.image_size, cap);
  s.image_size = r.size;
  if (r.scale != 1.0) s.tags.insert(detail::resize_tag(r.scale));
  return s;
}

}  // namespace forge
