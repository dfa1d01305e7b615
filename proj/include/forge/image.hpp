#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "forge/error.hpp"

namespace forge {

/// Row-major RGBA8 raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static Image filled(int w, int h, std::array<std::uint8_t, 4> rgba) {
    if (w < 1 || h < 1) throw ValidationError("image: dimensions must be positive");
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 4);
    for (std::size_t i = 0; i < img.pixels.size(); i += 4)
      for (int c = 0; c < 4; ++c) img.pixels[i + c] = rgba[static_cast<std::size_t>(c)];
    return img;
  }

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height * 4;
  }

  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 4;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 4;
  }
};

/// Bilinear resample with the align-centers convention. A constant image
/// stays constant; the identity size is a pixel-exact copy.
inline Image resize_bilinear(const Image& src, int new_w, int new_h) {
  if (!src.valid()) throw ValidationError("resize: invalid source image");
  if (new_w < 1 || new_h < 1)
    throw ValidationError("resize: target dimensions must be positive");
  if (new_w == src.width && new_h == src.height) return src;
  Image dst;
  dst.width = new_w;
  dst.height = new_h;
  dst.pixels.resize(static_cast<std::size_t>(new_w) * new_h * 4);
  const double sx = static_cast<double>(src.width) / new_w;
  const double sy = static_cast<double>(src.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double ty = fy - y0;
    int ya = std::clamp(y0, 0, src.height - 1);
    int yb = std::clamp(y0 + 1, 0, src.height - 1);
    for (int x = 0; x < new_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double tx = fx - x0;
      int xa = std::clamp(x0, 0, src.width - 1);
      int xb = std::clamp(x0 + 1, 0, src.width - 1);
      const std::uint8_t* p00 = src.at(xa, ya);
      const std::uint8_t* p10 = src.at(xb, ya);
      const std::uint8_t* p01 = src.at(xa, yb);
      const std::uint8_t* p11 = src.at(xb, yb);
      std::uint8_t* out = dst.at(x, y);
      for (int c = 0; c < 4; ++c) {
        double top = p00[c] * (1.0 - tx) + p10[c] * tx;
        double bot = p01[c] * (1.0 - tx) + p11[c] * tx;
        double v = top * (1.0 - ty) + bot * ty;
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return dst;
}

/// Source-over composite of `src` onto `dst` with its top-left corner at
/// (dx, dy); parts falling outside `dst` are clipped away.
inline void alpha_blit(Image& dst, const Image& src, int dx, int dy) {
  if (!dst.valid() || !src.valid()) throw ValidationError("blit: invalid image");
  int x_begin = std::max(0, dx);
  int y_begin = std::max(0, dy);
  int x_end = std::min(dst.width, dx + src.width);
  int y_end = std::min(dst.height, dy + src.height);
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = x_begin; x < x_end; ++x) {
      const std::uint8_t* s = src.at(x - dx, y - dy);
      std::uint8_t* d = dst.at(x, y);
      unsigned sa = s[3];
      if (sa == 255) {
        for (int c = 0; c < 4; ++c) d[c] = s[c];
        continue;
      }
      if (sa == 0) continue;
      for (int c = 0; c < 3; ++c) {
        unsigned blended = s[c] * sa + d[c] * (255 - sa);
        d[c] = static_cast<std::uint8_t>((blended + 127) / 255);
      }
      unsigned out_a = sa * 255 + d[3] * (255 - sa);
      d[3] = static_cast<std::uint8_t>((out_a + 127) / 255);
    }
  }
}

}  // namespace forge
