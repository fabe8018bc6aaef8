// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "viewfool/image.hpp"

namespace viewfool {
namespace {

ImageBuffer gradient_image(int w, int h) {
  ImageBuffer img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      img.set(static_cast<std::size_t>(r * w + c), {c / double(w), r / double(h), 0.25});
  return img;
}

TEST(Quantize, RoundsHalfToEven) {
  EXPECT_EQ(quantize_channel(127.5 / 255.0), 128);
  EXPECT_EQ(quantize_channel(126.5 / 255.0), 126);
  EXPECT_EQ(quantize_channel(0.0), 0);
  EXPECT_EQ(quantize_channel(1.0), 255);
  EXPECT_EQ(quantize_channel(0.2 / 255.0), 0);
  EXPECT_EQ(quantize_channel(-0.5), 0);
  EXPECT_EQ(quantize_channel(2.0), 255);
}

TEST(Ppm, HeaderAndPayload) {
  ImageBuffer img(2, 1);
  img.set(0, {1, 0, 0});
  img.set(1, {0, 0.5, 1});
  const std::string ppm = encode_ppm(img);
  EXPECT_EQ(ppm, std::string("P6\n2 1\n255\n\xff\x00\x00\x00\x80\xff", 17));
}

TEST(Png, ChunksCarryValidCrcs) {
  const std::string png = encode_png(gradient_image(7, 5));
  ASSERT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  std::size_t pos = 8;
  std::vector<std::string> types;
  while (pos < png.size()) {
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<unsigned char>(png[pos + i]);
    const std::string type = png.substr(pos + 4, 4);
    types.push_back(type);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored = (stored << 8) | static_cast<unsigned char>(png[pos + 8 + len + i]);
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(png.data() + pos + 4), len + 4);
    EXPECT_EQ(stored, crc) << type;
    pos += 12 + len;
  }
  EXPECT_EQ(types, (std::vector<std::string>{"IHDR", "IDAT", "IEND"}));
}

TEST(Png, RoundTripIsQuantizationExact) {
  const ImageBuffer img = gradient_image(13, 9);
  const ImageBuffer back = decode_png(encode_png(img));
  ASSERT_EQ(back.width, 13);
  ASSERT_EQ(back.height, 9);
  EXPECT_EQ(to_rgb8(back), to_rgb8(img));
}

TEST(Png, RejectsForeignData) {
  EXPECT_THROW(decode_png("not a png"), ParseError);
  std::string png = encode_png(gradient_image(4, 4));
  EXPECT_THROW(decode_png(png.substr(0, 30)), ParseError);
}

TEST(WriteImage, ExtensionPicksFormat) {
  const auto dir = std::filesystem::temp_directory_path();
  const ImageBuffer img = gradient_image(3, 2);
  write_image(img, dir / "viewfool_img.ppm");
  write_image(img, dir / "viewfool_img.png");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(dir / "viewfool_img.ppm"), encode_ppm(img));
  EXPECT_EQ(slurp(dir / "viewfool_img.png"), encode_png(img));
  std::filesystem::remove(dir / "viewfool_img.ppm");
  std::filesystem::remove(dir / "viewfool_img.png");
}

}  // namespace
}  // namespace viewfool
