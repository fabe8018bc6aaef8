// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/geometry.hpp"
#include "viewfool/math.hpp"

namespace viewfool {

struct Aabb {
  Vec3 lo;
  Vec3 hi;

  bool contains(Vec3 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
  friend bool operator==(const Aabb&, const Aabb&) = default;
};

struct FieldSample {
  Rgb color;
  double density = 0.0;
};

/// Vertex-centred voxel grid standing in for a trained radiance field. Node
/// (i, j, k) sits at lo + (i, j, k) * spacing, so the outermost nodes lie on
/// the bounding box. Storage is x-fastest; colors are interleaved RGB.
class VoxelField {
 public:
  VoxelField(std::array<int, 3> resolution, Aabb bbox, std::vector<float> densities,
             std::vector<float> colors)
      : res_(resolution), bbox_(bbox), density_(std::move(densities)), color_(std::move(colors)) {
    for (int n : res_)
      if (n < 2) throw InvalidArgument("voxel resolution must be at least 2 per axis");
    for (int a = 0; a < 3; ++a)
      if (!(bbox_.hi[a] > bbox_.lo[a]) || !std::isfinite(bbox_.lo[a]) || !std::isfinite(bbox_.hi[a]))
        throw InvalidArgument("bounding box needs positive finite extent on every axis");
    const std::size_t n = node_count();
    if (density_.size() != n || color_.size() != 3 * n)
      throw InvalidArgument("voxel array sizes do not match the resolution");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(density_[i] >= 0.0f) || !std::isfinite(density_[i]))
        throw ValidationError("density must be finite and nonnegative", i);
      for (int c = 0; c < 3; ++c) {
        const float v = color_[3 * i + static_cast<std::size_t>(c)];
        if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("color channel outside [0,1]", i);
      }
    }
    for (int a = 0; a < 3; ++a) {
      scale_[a] = (res_[a] - 1) / (bbox_.hi[a] - bbox_.lo[a]);
    }
  }

  const std::array<int, 3>& resolution() const { return res_; }
  const Aabb& bbox() const { return bbox_; }
  std::span<const float> densities() const { return density_; }
  std::span<const float> colors() const { return color_; }

  std::size_t node_count() const {
    return static_cast<std::size_t>(res_[0]) * static_cast<std::size_t>(res_[1]) *
           static_cast<std::size_t>(res_[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(res_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(res_[1]) * static_cast<std::size_t>(k));
  }
  Vec3 node_position(int i, int j, int k) const {
    return {bbox_.lo.x + i / scale_[0], bbox_.lo.y + j / scale_[1], bbox_.lo.z + k / scale_[2]};
  }
  Vec3 spacing() const { return {1.0 / scale_[0], 1.0 / scale_[1], 1.0 / scale_[2]}; }

  /// Trilinear lookup. The viewing direction is accepted for interface
  /// compatibility with view-dependent fields; this field ignores it.
  FieldSample sample(Vec3 x, Vec3 /*direction*/) const {
    Cell c;
    if (!locate(x, c)) return {};
    FieldSample out;
    out.density = blend(density_.data(), 1, 0, c);
    out.color = {blend(color_.data(), 3, 0, c), blend(color_.data(), 3, 1, c), blend(color_.data(), 3, 2, c)};
    return out;
  }

  /// Density only; zero outside the box.
  double density_at(Vec3 x) const {
    Cell c;
    if (!locate(x, c)) return 0.0;
    return blend(density_.data(), 1, 0, c);
  }

  friend bool operator==(const VoxelField&, const VoxelField&) = default;

 private:
  struct Cell {
    std::size_t base = 0;
    double fx = 0, fy = 0, fz = 0;
  };

  bool locate(Vec3 x, Cell& c) const {
    const double gx = (x.x - bbox_.lo.x) * scale_[0];
    const double gy = (x.y - bbox_.lo.y) * scale_[1];
    const double gz = (x.z - bbox_.lo.z) * scale_[2];
    if (!(gx >= 0.0 && gy >= 0.0 && gz >= 0.0)) return false;
    if (!(gx <= res_[0] - 1 && gy <= res_[1] - 1 && gz <= res_[2] - 1)) return false;
    const int i = std::min(static_cast<int>(gx), res_[0] - 2);
    const int j = std::min(static_cast<int>(gy), res_[1] - 2);
    const int k = std::min(static_cast<int>(gz), res_[2] - 2);
    c.base = index(i, j, k);
    c.fx = gx - i;
    c.fy = gy - j;
    c.fz = gz - k;
    return true;
  }

  double blend(const float* data, std::size_t stride, std::size_t channel, const Cell& c) const {
    const std::size_t sx = stride;
    const std::size_t sy = stride * static_cast<std::size_t>(res_[0]);
    const std::size_t sz = sy * static_cast<std::size_t>(res_[1]);
    const float* p = data + c.base * stride + channel;
    const double c00 = p[0] + (p[sx] - static_cast<double>(p[0])) * c.fx;
    const double c10 = p[sy] + (p[sy + sx] - static_cast<double>(p[sy])) * c.fx;
    const double c01 = p[sz] + (p[sz + sx] - static_cast<double>(p[sz])) * c.fx;
    const double c11 = p[sz + sy] + (p[sz + sy + sx] - static_cast<double>(p[sz + sy])) * c.fx;
    const double c0 = c00 + (c10 - c00) * c.fy;
    const double c1 = c01 + (c11 - c01) * c.fy;
    return c0 + (c1 - c0) * c.fz;
  }

  std::array<int, 3> res_;
  Aabb bbox_;
  std::vector<float> density_;
  std::vector<float> color_;
  std::array<double, 3> scale_{};
};

/// Free-function form of VoxelField::sample.
inline FieldSample query(const VoxelField& field, Vec3 x, Vec3 d) { return field.sample(x, d); }

/// A field bound to the ground-truth label of the object it depicts.
struct SceneSpec {
  VoxelField field;
  std::uint32_t label = 0;
  std::string name;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

enum class PrimitiveKind { box, sphere, two_tone_cube, asymmetric_marker };

inline PrimitiveKind parse_primitive_kind(std::string_view s) {
  if (s == "box") return PrimitiveKind::box;
  if (s == "sphere") return PrimitiveKind::sphere;
  if (s == "two_tone_cube") return PrimitiveKind::two_tone_cube;
  if (s == "asymmetric_marker") return PrimitiveKind::asymmetric_marker;
  throw InvalidArgument("unknown primitive kind '" + std::string(s) + "'");
}

struct PrimitiveParams {
  double half_extent = 1.0;  // bbox is [-half_extent, half_extent]^3
  double size = 0.6;         // box/cube half-size or sphere radius
  double density = 50.0;
  Rgb color{0.6, 0.6, 0.6};
  Rgb second_color{0.1, 0.3, 0.9};  // back half of two_tone_cube, marker cap
  // asymmetric_marker: a spherical cap of second_color centred on the
  // direction the camera has at (yaw, elevation) = (marker_yaw_deg, marker_elev_deg).
  double marker_yaw_deg = 60.0;
  double marker_elev_deg = 20.0;
  double marker_half_angle_deg = 40.0;
};

/// Unit vector from the origin toward a camera placed at yaw/elevation
/// (degrees) by the default orbit (init center on +y, yaw about z).
inline Vec3 orbit_direction(double yaw_deg, double elev_deg) {
  return normalized(rotation_z(deg_to_rad(yaw_deg)) * rotation_x(deg_to_rad(elev_deg)) * Vec3{0, 1, 0});
}

inline VoxelField build_primitive_scene(PrimitiveKind kind, std::array<int, 3> resolution,
                                        const PrimitiveParams& params) {
  for (int n : resolution)
    if (n < 2) throw InvalidArgument("voxel resolution must be at least 2 per axis");
  if (!(params.half_extent > 0.0)) throw InvalidArgument("half_extent must be positive");
  if (!(params.density >= 0.0)) throw InvalidArgument("density must be nonnegative");

  const double h = params.half_extent;
  const Aabb bbox{{-h, -h, -h}, {h, h, h}};
  const std::size_t n = static_cast<std::size_t>(resolution[0]) * static_cast<std::size_t>(resolution[1]) *
                        static_cast<std::size_t>(resolution[2]);
  std::vector<float> density(n, 0.0f), color(3 * n, 0.0f);
  const Vec3 marker_dir = orbit_direction(params.marker_yaw_deg, params.marker_elev_deg);
  const double cos_cap = std::cos(deg_to_rad(params.marker_half_angle_deg));

  auto inside = [&](Vec3 p) {
    switch (kind) {
      case PrimitiveKind::box:
      case PrimitiveKind::two_tone_cube:
        return std::abs(p.x) <= params.size && std::abs(p.y) <= params.size && std::abs(p.z) <= params.size;
      case PrimitiveKind::sphere:
      case PrimitiveKind::asymmetric_marker:
        return params.size > 0.0 && dot(p, p) <= params.size * params.size;
    }
    return false;
  };
  // Colors are defined everywhere (not only inside the shape) so trilinear
  // blending at surfaces never mixes in black.
  auto shade = [&](Vec3 p) -> Rgb {
    switch (kind) {
      case PrimitiveKind::two_tone_cube:
        return p.y >= 0.0 ? params.color : params.second_color;
      case PrimitiveKind::asymmetric_marker: {
        const double r = norm(p);
        if (r > 0.0 && dot(p, marker_dir) >= cos_cap * r) return params.second_color;
        return params.color;
      }
      default:
        return params.color;
    }
  };

  const std::array<double, 3> step = {2 * h / (resolution[0] - 1), 2 * h / (resolution[1] - 1),
                                      2 * h / (resolution[2] - 1)};
  std::size_t idx = 0;
  for (int k = 0; k < resolution[2]; ++k)
    for (int j = 0; j < resolution[1]; ++j)
      for (int i = 0; i < resolution[0]; ++i, ++idx) {
        const Vec3 p{-h + i * step[0], -h + j * step[1], -h + k * step[2]};
        if (inside(p)) density[idx] = static_cast<float>(params.density);
        const Rgb c = shade(p);
        color[3 * idx + 0] = static_cast<float>(std::clamp(c.r, 0.0, 1.0));
        color[3 * idx + 1] = static_cast<float>(std::clamp(c.g, 0.0, 1.0));
        color[3 * idx + 2] = static_cast<float>(std::clamp(c.b, 0.0, 1.0));
      }
  return VoxelField(resolution, bbox, std::move(density), std::move(color));
}

// ---------------------------------------------------------------------------
// Scene container, version 1. All integers and floats little-endian.
//
//   off  size          field
//   0    8             magic "VFSCENE\0"
//   8    4   u32       format version (= 1)
//   12   4   u32       label
//   16   4   u32       name length L
//   20   L             name bytes (UTF-8)
//   ..   12  3 x u32   resolution nx, ny, nz
//   ..   48  6 x f64   bbox lo.x lo.y lo.z hi.x hi.y hi.z
//   ..   4n  n x f32   densities, x-fastest (n = nx*ny*nz)
//   ..   12n 3n x f32  colors, RGB interleaved per node, x-fastest
// No trailing bytes are allowed.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSceneMagic{"VFSCENE\0", 8};
inline constexpr std::uint32_t kSceneVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::string_view take(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) throw ParseError(std::string("truncated file while reading ") + what, pos_);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }
  std::uint64_t u64(const char* what) {
    auto s = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_scene(const SceneSpec& scene) {
  const VoxelField& f = scene.field;
  std::string out(kSceneMagic);
  detail::put_u32(out, kSceneVersion);
  detail::put_u32(out, scene.label);
  detail::put_u32(out, static_cast<std::uint32_t>(scene.name.size()));
  out += scene.name;
  for (int n : f.resolution()) detail::put_u32(out, static_cast<std::uint32_t>(n));
  for (int a = 0; a < 3; ++a) detail::put_f64(out, f.bbox().lo[a]);
  for (int a = 0; a < 3; ++a) detail::put_f64(out, f.bbox().hi[a]);
  for (float d : f.densities()) detail::put_f32(out, d);
  for (float c : f.colors()) detail::put_f32(out, c);
  return out;
}

inline SceneSpec deserialize_scene(std::string_view bytes) {
  detail::ByteReader in(bytes);
  if (in.take(kSceneMagic.size(), "magic") != kSceneMagic) throw ParseError("bad magic; not a scene file", 0);
  const std::size_t version_offset = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kSceneVersion)
    throw VersionError("unsupported scene format version " + std::to_string(version) + " at byte " +
                       std::to_string(version_offset) + " (expected " + std::to_string(kSceneVersion) + ")");
  const std::uint32_t label = in.u32("label");
  const std::uint32_t name_len = in.u32("name length");
  std::string name(in.take(name_len, "name"));
  std::array<int, 3> res{};
  for (int& n : res) {
    const std::size_t at = in.offset();
    const std::uint32_t v = in.u32("resolution");
    if (v < 2 || v > 4096) throw ParseError("resolution out of range", at);
    n = static_cast<int>(v);
  }
  Aabb bbox;
  for (int a = 0; a < 3; ++a) bbox.lo[a] = in.f64("bbox");
  for (int a = 0; a < 3; ++a) bbox.hi[a] = in.f64("bbox");
  const std::size_t n = static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
                        static_cast<std::size_t>(res[2]);
  std::vector<float> density(n), color(3 * n);
  for (float& d : density) d = in.f32("densities");
  for (float& c : color) c = in.f32("colors");
  if (!in.at_end()) throw ParseError("unexpected trailing bytes", in.offset());
  return SceneSpec{VoxelField(res, bbox, std::move(density), std::move(color)), label, std::move(name)};
}

inline void save_scene(const SceneSpec& scene, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_scene(scene);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing " + path.string());
}

inline SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open scene file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_scene(bytes);
}

}  // namespace viewfool
