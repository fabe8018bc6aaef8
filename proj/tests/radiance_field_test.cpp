// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "viewfool/radiance_field.hpp"
#include "viewfool/renderer.hpp"

namespace viewfool {
namespace {

VoxelField two_node_field() {
  // 2x2x2 grid on [0,1]^3; density 2 on x = 0, 4 on x = 1.
  std::vector<float> density = {2, 4, 2, 4, 2, 4, 2, 4};
  std::vector<float> color(24, 0.5f);
  return VoxelField({2, 2, 2}, Aabb{{0, 0, 0}, {1, 1, 1}}, density, color);
}

VoxelField random_field(std::uint64_t seed, std::array<int, 3> res = {5, 4, 6}) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const std::size_t n = static_cast<std::size_t>(res[0] * res[1] * res[2]);
  std::vector<float> density(n), color(3 * n);
  for (auto& d : density) d = 10.0f * u(gen);
  for (auto& c : color) c = u(gen);
  return VoxelField(res, Aabb{{-1, -0.5, -2}, {1, 1.5, 0}}, density, color);
}

TEST(VoxelField, NodeValuesAreReproduced) {
  const VoxelField f = random_field(1);
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) {
        const FieldSample s = query(f, f.node_position(i, j, k), {0, 0, 1});
        const std::size_t idx = f.index(i, j, k);
        ASSERT_NEAR(s.density, f.densities()[idx], 1e-5);
        ASSERT_NEAR(s.color.g, f.colors()[3 * idx + 1], 1e-6);
      }
}

TEST(VoxelField, OutsideTheBoxIsEmptyAndBlack) {
  const VoxelField f = random_field(2);
  for (Vec3 x : {Vec3{1.01, 0, -1}, Vec3{0, -0.6, -1}, Vec3{0, 0, 0.5}, Vec3{-5, 7, 2}}) {
    const FieldSample s = query(f, x, {1, 0, 0});
    EXPECT_EQ(s.density, 0.0);
    EXPECT_EQ(s.color.r, 0.0);
    EXPECT_EQ(s.color.g, 0.0);
    EXPECT_EQ(s.color.b, 0.0);
  }
}

TEST(VoxelField, MidpointIsLinear) {
  EXPECT_DOUBLE_EQ(query(two_node_field(), {0.5, 0.3, 0.7}, {0, 1, 0}).density, 3.0);
  EXPECT_DOUBLE_EQ(two_node_field().density_at({0.25, 0.9, 0.1}), 2.5);
}

TEST(VoxelField, LipschitzInEveryAxis) {
  const VoxelField f = random_field(3);
  const auto res = f.resolution();
  // Along axis a the interpolant moves at most (largest neighbour step) / spacing.
  std::array<double, 3> slope{};
  for (int k = 0; k < res[2]; ++k)
    for (int j = 0; j < res[1]; ++j)
      for (int i = 0; i < res[0]; ++i) {
        const double d = f.densities()[f.index(i, j, k)];
        if (i + 1 < res[0]) slope[0] = std::max(slope[0], std::abs(f.densities()[f.index(i + 1, j, k)] - d));
        if (j + 1 < res[1]) slope[1] = std::max(slope[1], std::abs(f.densities()[f.index(i, j + 1, k)] - d));
        if (k + 1 < res[2]) slope[2] = std::max(slope[2], std::abs(f.densities()[f.index(i, j, k + 1)] - d));
      }
  const Vec3 h = f.spacing();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 20000; ++n) {
    const Vec3 x1{-1 + 2 * u(gen), -0.5 + 2 * u(gen), -2 + 2 * u(gen)};
    Vec3 step{u(gen) - 0.5, u(gen) - 0.5, u(gen) - 0.5};
    step = (h.x * u(gen) / norm(step)) * step;
    const Vec3 x2 = x1 + step;
    if (!f.bbox().contains(x2)) continue;
    const double bound = slope[0] / h.x * std::abs(step.x) + slope[1] / h.y * std::abs(step.y) +
                         slope[2] / h.z * std::abs(step.z);
    ASSERT_LE(std::abs(f.density_at(x1) - f.density_at(x2)), bound + 1e-9);
  }
}

TEST(VoxelField, RejectsInvalidContents) {
  std::vector<float> d(8, 1.0f), c(24, 0.5f);
  EXPECT_THROW(VoxelField({1, 2, 2}, Aabb{{0, 0, 0}, {1, 1, 1}}, std::vector<float>(4, 1.0f), std::vector<float>(12)),
               InvalidArgument);
  EXPECT_THROW(VoxelField({2, 2, 2}, Aabb{{0, 0, 0}, {1, 0, 1}}, d, c), InvalidArgument);
  EXPECT_THROW(VoxelField({2, 2, 2}, Aabb{{0, 0, 0}, {1, 1, 1}}, std::vector<float>(7, 1.0f), c), InvalidArgument);
  d[6] = -1.0f;
  try {
    VoxelField({2, 2, 2}, Aabb{{0, 0, 0}, {1, 1, 1}}, d, c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.index(), 6u);
  }
  d[6] = 1.0f;
  c[13] = 1.5f;
  try {
    VoxelField({2, 2, 2}, Aabb{{0, 0, 0}, {1, 1, 1}}, d, c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.index(), 4u);
  }
}

TEST(PrimitiveScene, ZeroRadiusSphereIsEmpty) {
  PrimitiveParams p;
  p.size = 0.0;
  const VoxelField f = build_primitive_scene(PrimitiveKind::sphere, {9, 9, 9}, p);
  for (float d : f.densities()) ASSERT_EQ(d, 0.0f);
}

TEST(PrimitiveScene, DeterministicAndValidated) {
  EXPECT_EQ(build_primitive_scene(PrimitiveKind::asymmetric_marker, {12, 12, 12}, {}),
            build_primitive_scene(PrimitiveKind::asymmetric_marker, {12, 12, 12}, {}));
  EXPECT_THROW(build_primitive_scene(PrimitiveKind::box, {1, 4, 4}, {}), InvalidArgument);
  EXPECT_THROW(parse_primitive_kind("pyramid"), InvalidArgument);
  EXPECT_EQ(parse_primitive_kind("two_tone_cube"), PrimitiveKind::two_tone_cube);
}

ViewpointBounds orbit_bounds() { return ViewpointBounds({-180, -90, -90, -1, -1, -1}, {180, 90, 90, 1, 1, 1}); }

TEST(PrimitiveScene, DenseFullBoxIsOpaqueAtTheFirstSample) {
  PrimitiveParams p;
  p.size = 1.0;
  p.density = 1e6;
  const VoxelField f = build_primitive_scene(PrimitiveKind::box, {8, 8, 8}, p);
  const auto b = orbit_bounds();
  for (double yaw : {0.0, 77.0, 180.0, -120.0}) {
    const auto rays = generate_rays(viewpoint_to_pose(Viewpoint({yaw, 30, 10, 0, 0, 0}, b), b), 1, 1, 30, 2, 6);
    Rng rng(0);
    const auto t = sample_quadrature(rays[0], 64, false, rng);
    std::vector<double> w(t.size());
    composite_ray(f, rays[0], std::span<const double>(t), {1, 1, 1}, w);
    const auto first = std::find_if(w.begin(), w.end(), [](double x) { return x > 0.0; });
    ASSERT_NE(first, w.end());
    EXPECT_GT(*first, 1.0 - 1e-9);
  }
}

// Mean over pixels that are not pure background white.
Rgb mean_color(const ImageBuffer& img) {
  Rgb m;
  double n = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
    if (r > 0.999 && g > 0.999 && b > 0.999) continue;
    m.r += r;
    m.g += g;
    m.b += b;
    n += 1.0;
  }
  return {m.r / n, m.g / n, m.b / n};
}

TEST(PrimitiveScene, TwoToneCubeFrontAndBackDiffer) {
  const VoxelField f = build_primitive_scene(PrimitiveKind::two_tone_cube, {24, 24, 24}, {});
  const auto b = orbit_bounds();
  RenderConfig rc;
  rc.width = rc.height = 24;
  const Rgb front = mean_color(render(f, Viewpoint({0, 0, 0, 0, 0, 0}, b), b, rc));
  const Rgb back = mean_color(render(f, Viewpoint({180, 0, 0, 0, 0, 0}, b), b, rc));
  EXPECT_GT(std::abs(front.b - back.b), 0.1);
  EXPECT_GT(std::abs(front.r - back.r), 0.1);
}

TEST(PrimitiveScene, MarkerCapOnlyFromItsSide) {
  PrimitiveParams p;
  p.color = {0.5, 0.5, 0.5};
  p.second_color = {1.0, 0.0, 0.0};
  const VoxelField f = build_primitive_scene(PrimitiveKind::asymmetric_marker, {32, 32, 32}, p);
  const auto b = orbit_bounds();
  RenderConfig rc;
  rc.width = rc.height = 24;
  auto redness = [&](double yaw, double elev) {
    const Rgb m = mean_color(render(f, Viewpoint({yaw, 0, elev, 0, 0, 0}, b), b, rc));
    return m.r - m.g;
  };
  EXPECT_GT(redness(60, 20), 0.1);
  EXPECT_LT(redness(-120, -20), 1e-6);
}

SceneSpec sample_scene(PrimitiveKind kind) {
  return SceneSpec{build_primitive_scene(kind, {7, 6, 5}, {}), 3, "obj"};
}

TEST(SceneFile, RoundTripEveryKind) {
  for (auto kind : {PrimitiveKind::box, PrimitiveKind::sphere, PrimitiveKind::two_tone_cube,
                    PrimitiveKind::asymmetric_marker}) {
    const SceneSpec s = sample_scene(kind);
    const SceneSpec r = deserialize_scene(serialize_scene(s));
    EXPECT_EQ(r.field, s.field);
    EXPECT_EQ(r.label, s.label);
    EXPECT_EQ(r.name, s.name);
  }
  const auto path = std::filesystem::temp_directory_path() / "viewfool_roundtrip.vfscene";
  SceneSpec s{random_field(4), 1, "random"};
  save_scene(s, path);
  const SceneSpec r = load_scene(path);
  EXPECT_EQ(r.field, s.field);
  for (std::size_t i = 0; i < s.field.densities().size(); ++i)
    ASSERT_EQ(std::bit_cast<std::uint32_t>(r.field.densities()[i]), std::bit_cast<std::uint32_t>(s.field.densities()[i]));
  std::filesystem::remove(path);
}

TEST(SceneFile, DocumentedLayout) {
  const SceneSpec s = sample_scene(PrimitiveKind::box);
  const std::string bytes = serialize_scene(s);
  EXPECT_EQ(bytes.substr(0, 8), std::string("VFSCENE\0", 8));
  auto u32 = [&](std::size_t at) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + at, 4);
    return v;
  };
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 3u);
  EXPECT_EQ(bytes.substr(20, 3), "obj");
  EXPECT_EQ(u32(23), 7u);
  EXPECT_EQ(u32(27), 6u);
  EXPECT_EQ(u32(31), 5u);
  double lo_x;
  std::memcpy(&lo_x, bytes.data() + 35, 8);
  EXPECT_EQ(lo_x, -1.0);
  const std::size_t n = 7 * 6 * 5;
  EXPECT_EQ(bytes.size(), 35 + 48 + 4 * n + 12 * n);
}

TEST(SceneFile, TruncationIsAParseError) {
  const std::string bytes = serialize_scene(sample_scene(PrimitiveKind::sphere));
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{21}, std::size_t{40}, bytes.size() - 1}) {
    try {
      deserialize_scene(std::string_view(bytes).substr(0, cut));
      FAIL() << "cut " << cut;
    } catch (const ParseError& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
  EXPECT_THROW(deserialize_scene(bytes + "x"), ParseError);
  std::string bad = bytes;
  bad[0] = 'X';
  try {
    deserialize_scene(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(SceneFile, VersionMismatch) {
  std::string bytes = serialize_scene(sample_scene(PrimitiveKind::sphere));
  bytes[8] = 2;
  EXPECT_THROW(deserialize_scene(bytes), VersionError);
}

TEST(SceneFile, NegativeDensityNamesTheVoxel) {
  std::string bytes = serialize_scene(sample_scene(PrimitiveKind::box));
  const float minus_one = -1.0f;
  std::memcpy(bytes.data() + 35 + 48 + 4 * 37, &minus_one, 4);
  try {
    deserialize_scene(bytes);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.index(), 37u);
  }
}

TEST(SceneFile, MissingFile) { EXPECT_THROW(load_scene("/nonexistent/viewfool.vfscene"), Error); }

}  // namespace
}  // namespace viewfool
