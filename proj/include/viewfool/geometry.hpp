// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/math.hpp"

namespace viewfool {

/// Component order of a viewpoint vector: yaw, pitch, roll (degrees), then
/// world-frame camera offsets.
enum ViewDim : std::size_t { kPsi = 0, kTheta, kPhi, kDx, kDy, kDz };

inline constexpr std::array<const char*, 6> kViewDimNames = {"psi", "theta", "phi", "dx", "dy", "dz"};

/// Per-component box [v_min, v_max] plus the affine map a*tanh(u)+b onto it.
class ViewpointBounds {
 public:
  ViewpointBounds(const Vec6& v_min, const Vec6& v_max) : v_min_(v_min), v_max_(v_max) {
    for (std::size_t d = 0; d < 6; ++d) {
      if (!std::isfinite(v_min[d]) || !std::isfinite(v_max[d]))
        throw InvalidArgument(std::string("non-finite bound for ") + kViewDimNames[d]);
      if (!(v_min[d] < v_max[d]))
        throw InvalidArgument(std::string("empty bound interval for ") + kViewDimNames[d]);
      a_[d] = (v_max[d] - v_min[d]) / 2.0;
      b_[d] = (v_max[d] + v_min[d]) / 2.0;
    }
  }

  const Vec6& v_min() const { return v_min_; }
  const Vec6& v_max() const { return v_max_; }
  /// Half-widths.
  const Vec6& a() const { return a_; }
  /// Midpoints.
  const Vec6& b() const { return b_; }

  bool contains(const Vec6& v) const {
    for (std::size_t d = 0; d < 6; ++d)
      if (!(v[d] >= v_min_[d] && v[d] <= v_max_[d])) return false;
    return true;
  }

  bool strictly_contains(const Vec6& v) const {
    for (std::size_t d = 0; d < 6; ++d)
      if (!(v[d] > v_min_[d] && v[d] < v_max_[d])) return false;
    return true;
  }

  void check(const Vec6& v) const {
    for (std::size_t d = 0; d < 6; ++d) {
      if (!(v[d] >= v_min_[d] && v[d] <= v_max_[d])) {
        throw BoundsError(std::string("viewpoint component ") + kViewDimNames[d] + " = " +
                          std::to_string(v[d]) + " outside [" + std::to_string(v_min_[d]) + ", " +
                          std::to_string(v_max_[d]) + "]");
      }
    }
  }

  friend bool operator==(const ViewpointBounds&, const ViewpointBounds&) = default;

 private:
  Vec6 v_min_, v_max_, a_{}, b_{};
};

/// psi in [-180,180], theta in [-30,30], phi in [20,160] degrees; dx, dz in
/// [-0.5,0.5] and dy in [-1,1].
inline ViewpointBounds paper_full_bounds() {
  return {{-180.0, -30.0, 20.0, -0.5, -1.0, -0.5}, {180.0, 30.0, 160.0, 0.5, 1.0, 0.5}};
}

/// Bounds used by the desk-scale marker scenario: full yaw, low elevations.
inline ViewpointBounds toy_wedge_bounds() {
  return {{-180.0, -20.0, 0.0, -0.3, -0.3, -0.3}, {180.0, 20.0, 40.0, 0.3, 0.3, 0.3}};
}

/// Camera parameters [psi, theta, phi, dx, dy, dz]; angles in degrees.
class Viewpoint {
 public:
  Viewpoint(const Vec6& values, const ViewpointBounds& bounds) : values_(values) {
    bounds.check(values);
  }

  const Vec6& values() const { return values_; }
  double operator[](std::size_t d) const { return values_[d]; }
  double psi() const { return values_[kPsi]; }
  double theta() const { return values_[kTheta]; }
  double phi() const { return values_[kPhi]; }
  Vec3 offset() const { return {values_[kDx], values_[kDy], values_[kDz]}; }

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;

 private:
  Vec6 values_;
};

/// Camera-to-world rotation (columns: right, up, backward; the camera looks
/// along -column(2)) and the camera center in world coordinates.
struct CameraPose {
  Mat3 rotation;
  Vec3 center;

  Vec3 right() const { return rotation.column(0); }
  Vec3 up() const { return rotation.column(1); }
  Vec3 forward() const { return -rotation.column(2); }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;
  double t_near = 0.0;
  double t_far = 1.0;

  Vec3 at(double t) const { return origin + t * direction; }
};

inline Mat3 rotation_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
}
inline Mat3 rotation_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return Mat3{{c, 0, s, 0, 1, 0, -s, 0, c}};
}
inline Mat3 rotation_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return Mat3{{1, 0, 0, 0, c, -s, 0, s, c}};
}

/// Intrinsic z-y'-x'' rotation: yaw psi about z, pitch theta about the new y,
/// roll phi about the twice-rotated x. Equals Rz(psi) * Ry(theta) * Rx(phi).
inline Mat3 rotation_matrix(double psi_deg, double theta_deg, double phi_deg) {
  if (!std::isfinite(psi_deg) || !std::isfinite(theta_deg) || !std::isfinite(phi_deg))
    throw InvalidArgument("rotation angles must be finite");
  return rotation_z(deg_to_rad(psi_deg)) * rotation_y(deg_to_rad(theta_deg)) *
         rotation_x(deg_to_rad(phi_deg));
}

inline constexpr Vec3 kDefaultInitCenter{0.0, 4.0, 0.0};

/// Orientation of a camera at `center` looking at the origin with +z as the
/// up hint.
inline Mat3 look_at_origin(Vec3 center) {
  const Vec3 backward = normalized(center);
  Vec3 up_hint{0.0, 0.0, 1.0};
  if (std::abs(dot(up_hint, backward)) > 1.0 - 1e-9) up_hint = {0.0, 1.0, 0.0};
  const Vec3 right = normalized(cross(up_hint, backward));
  const Vec3 up = cross(backward, right);
  return Mat3::from_columns(right, up, backward);
}

/// Orbits the initial camera about the scene origin by the viewpoint's
/// rotation, then offsets its center by (dx, dy, dz) in world axes.
inline CameraPose viewpoint_to_pose(const Viewpoint& v, const ViewpointBounds& bounds,
                                    Vec3 init_center = kDefaultInitCenter) {
  bounds.check(v.values());
  const Mat3 r = rotation_matrix(v.psi(), v.theta(), v.phi());
  return CameraPose{r * look_at_origin(init_center), r * init_center + v.offset()};
}

/// Pinhole rays through pixel centers, row-major from the top-left pixel.
/// `fov_deg` is the vertical field of view.
inline std::vector<Ray> generate_rays(const CameraPose& pose, int width, int height,
                                      double fov_deg, double t_near, double t_far) {
  if (width < 1 || height < 1) throw InvalidArgument("image size must be at least 1x1");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw InvalidArgument("fov must lie in (0, 180)");
  if (!(t_near >= 0.0 && t_near < t_far)) throw InvalidArgument("need 0 <= t_near < t_far");
  const double half_h = std::tan(deg_to_rad(fov_deg) / 2.0);
  const double half_w = half_h * static_cast<double>(width) / static_cast<double>(height);
  const Vec3 right = pose.right(), up = pose.up(), forward = pose.forward();

  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int row = 0; row < height; ++row) {
    const double y = (1.0 - 2.0 * (row + 0.5) / height) * half_h;
    for (int col = 0; col < width; ++col) {
      const double x = (2.0 * (col + 0.5) / width - 1.0) * half_w;
      rays.push_back(Ray{pose.center, normalized(forward + x * right + y * up), t_near, t_far});
    }
  }
  return rays;
}

}  // namespace viewfool
