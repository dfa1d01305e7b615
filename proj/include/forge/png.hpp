#pragma once

#include <png.h>

#include <cstring>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "forge/error.hpp"
#include "forge/image.hpp"

namespace forge {

/// Decodes a PNG file into RGBA8; palette, gray, and alpha-less variants are
/// expanded by the codec.
inline Image read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("png: no such file '" + path.string() + "'");
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.string().c_str())) {
    std::string reason = im.message;
    png_image_free(&im);
    throw ParseError("png: cannot decode '" + path.string() + "': " + reason);
  }
  im.format = PNG_FORMAT_RGBA;
  Image out;
  out.width = static_cast<int>(im.width);
  out.height = static_cast<int>(im.height);
  out.pixels.resize(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string reason = im.message;
    png_image_free(&im);
    throw ParseError("png: cannot decode '" + path.string() + "': " + reason);
  }
  return out;
}

inline void write_png(const Image& img, const std::filesystem::path& path) {
  if (!img.valid()) throw ValidationError("png: refusing to write an invalid image");
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&im, path.string().c_str(), 0, img.pixels.data(), 0,
                               nullptr)) {
    std::string reason = im.message;
    png_image_free(&im);
    throw IoError("png: cannot write '" + path.string() + "': " + reason);
  }
}

inline void write_png(const Image& img, std::ostream& out) {
  if (!img.valid()) throw ValidationError("png: refusing to write an invalid image");
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&im, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    std::string reason = im.message;
    png_image_free(&im);
    throw IoError("png: cannot size encoded image: " + reason);
  }
  std::vector<unsigned char> buffer(size);
  if (!png_image_write_to_memory(&im, buffer.data(), &size, 0, img.pixels.data(), 0,
                                 nullptr)) {
    std::string reason = im.message;
    png_image_free(&im);
    throw IoError("png: cannot encode image: " + reason);
  }
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(size));
  if (!out) throw IoError("png: stream write failure");
}

}  // namespace forge
