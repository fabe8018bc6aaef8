// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/math.hpp"

namespace viewfool {

/// Row-major RGB image with channels in [0, 1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // 3 * width * height

  ImageBuffer() = default;
  ImageBuffer(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(3 * static_cast<std::size_t>(w) * h) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
      pixels[i] = fill.r;
      pixels[i + 1] = fill.g;
      pixels[i + 2] = fill.b;
    }
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  Rgb at(int row, int col) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(std::size_t pixel, Rgb c) {
    pixels[3 * pixel] = c.r;
    pixels[3 * pixel + 1] = c.g;
    pixels[3 * pixel + 2] = c.b;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// value*255 rounded half-to-even (the default FE_TONEAREST mode of nearbyint).
inline std::uint8_t quantize_channel(double v) {
  return static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::vector<std::uint8_t> to_rgb8(const ImageBuffer& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), quantize_channel);
  return out;
}

inline std::string encode_ppm(const ImageBuffer& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  const auto bytes = to_rgb8(img);
  out.append(bytes.begin(), bytes.end());
  return out;
}

namespace detail {

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void png_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// 8-bit RGB PNG, filter type 0 on every scanline, zlib level 9.
inline std::string encode_png(const ImageBuffer& img) {
  const auto rgb = to_rgb8(img);
  std::string raw;
  raw.reserve(rgb.size() + static_cast<std::size_t>(img.height));
  const std::size_t stride = 3 * static_cast<std::size_t>(img.width);
  for (int row = 0; row < img.height; ++row) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(rgb.data()) + row * stride, stride);
  }
  uLongf cap = compressBound(static_cast<uLong>(raw.size()));
  std::string z(cap, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &cap, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error("zlib compression failed");
  z.resize(cap);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // depth 8, RGB, deflate, filter 0, no interlace
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", z);
  detail::png_chunk(out, "IEND", "");
  return out;
}

/// Decodes the subset of PNG produced by encode_png (8-bit RGB, filter 0).
inline ImageBuffer decode_png(const std::string& png) {
  auto be32 = [&](std::size_t at) {
    if (at + 4 > png.size()) throw ParseError("truncated PNG", at);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(png[at + i]);
    return v;
  };
  if (png.size() < 8 || png.compare(0, 8, std::string("\x89PNG\r\n\x1a\n", 8)) != 0)
    throw ParseError("missing PNG signature", 0);
  std::size_t pos = 8;
  int w = 0, h = 0;
  std::string z;
  while (pos < png.size()) {
    const std::uint32_t len = be32(pos);
    if (pos + 12 + len > png.size()) throw ParseError("truncated PNG chunk", pos);
    const std::string type = png.substr(pos + 4, 4);
    const std::string data = png.substr(pos + 8, len);
    if (type == "IHDR") {
      if (len != 13 || data[8] != 8 || data[9] != 2 || data[12] != 0)
        throw ParseError("unsupported PNG layout", pos);
      w = static_cast<int>(be32(pos + 8));
      h = static_cast<int>(be32(pos + 12));
    } else if (type == "IDAT") {
      z += data;
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (w <= 0 || h <= 0) throw ParseError("PNG without IHDR", 8);
  const std::size_t stride = 3 * static_cast<std::size_t>(w);
  uLongf raw_len = static_cast<uLongf>((stride + 1) * static_cast<std::size_t>(h));
  std::string raw(raw_len, '\0');
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_len, reinterpret_cast<const Bytef*>(z.data()),
                 static_cast<uLong>(z.size())) != Z_OK ||
      raw_len != raw.size())
    throw ParseError("corrupt PNG image data", pos);
  ImageBuffer img(w, h);
  for (int row = 0; row < h; ++row) {
    const std::size_t src = static_cast<std::size_t>(row) * (stride + 1);
    if (raw[src] != 0) throw ParseError("unsupported PNG filter", src);
    for (std::size_t c = 0; c < stride; ++c)
      img.pixels[static_cast<std::size_t>(row) * stride + c] = static_cast<unsigned char>(raw[src + 1 + c]) / 255.0;
  }
  return img;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing " + path.string());
}

/// Writes PNG or PPM depending on the extension (".ppm" selects PPM).
inline void write_image(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file(path, path.extension() == ".ppm" ? encode_ppm(img) : encode_png(img));
}

}  // namespace viewfool
