// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "viewfool/geometry.hpp"

namespace viewfool {
namespace {

// Unit quaternions (w, x, y, z), used to compose rotations independently of
// the matrix product.
struct Quat {
  double w, x, y, z;
};

Quat axis_angle(Vec3 axis, double deg) {
  const double h = deg * std::numbers::pi / 360.0;
  return {std::cos(h), axis.x * std::sin(h), axis.y * std::sin(h), axis.z * std::sin(h)};
}

Quat mul(Quat a, Quat b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Mat3 to_matrix(Quat q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return Mat3{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
               2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),  //
               2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

// Intrinsic z-y'-x'': rotate about z, then the new y, then the newest x.
Mat3 quaternion_oracle(double psi, double theta, double phi) {
  return to_matrix(mul(mul(axis_angle({0, 0, 1}, psi), axis_angle({0, 1, 0}, theta)), axis_angle({1, 0, 0}, phi)));
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
  return m;
}

void expect_vec_near(Vec3 a, Vec3 b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

TEST(RotationMatrix, ZeroAnglesGiveIdentity) { EXPECT_EQ(max_abs_diff(rotation_matrix(0, 0, 0), Mat3::identity()), 0.0); }

TEST(RotationMatrix, QuarterYawTakesXToY) {
  expect_vec_near(rotation_matrix(90, 0, 0).column(0), {0, 1, 0}, 1e-15);
}

TEST(RotationMatrix, MatchesQuaternionComposition) {
  EXPECT_LE(max_abs_diff(rotation_matrix(30, 20, 10), quaternion_oracle(30, 20, 10)), 1e-12);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ang(-360.0, 360.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = ang(gen), b = ang(gen), c = ang(gen);
    ASSERT_LE(max_abs_diff(rotation_matrix(a, b, c), quaternion_oracle(a, b, c)), 1e-12) << a << " " << b << " " << c;
  }
}

TEST(RotationMatrix, OrthonormalWithUnitDeterminant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ang(-720.0, 720.0);
  for (int i = 0; i < 10000; ++i) {
    const Mat3 r = rotation_matrix(ang(gen), ang(gen), ang(gen));
    ASSERT_LE(max_abs_diff(r.transposed() * r, Mat3::identity()), 1e-9);
    ASSERT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(RotationMatrix, SingleAxisInverse) {
  for (double psi : {-170.0, -33.0, 12.5, 90.0, 179.0})
    EXPECT_LE(max_abs_diff(rotation_matrix(psi, 0, 0) * rotation_matrix(-psi, 0, 0), Mat3::identity()), 1e-9);
}

TEST(RotationMatrix, RejectsNonFiniteAngles) {
  EXPECT_THROW(rotation_matrix(std::nan(""), 0, 0), InvalidArgument);
  EXPECT_THROW(rotation_matrix(0, std::numeric_limits<double>::infinity(), 0), InvalidArgument);
}

ViewpointBounds wide_bounds() { return ViewpointBounds({-180, -90, -180, -2, -2, -2}, {180, 90, 180, 2, 2, 2}); }

TEST(ViewpointBounds, HalfWidthAndMidpointReproduceTheLimits) {
  for (const auto& b : {paper_full_bounds(), toy_wedge_bounds(), wide_bounds()})
    for (std::size_t d = 0; d < 6; ++d) {
      EXPECT_GT(b.a()[d], 0.0);
      EXPECT_EQ(b.a()[d] + b.b()[d], b.v_max()[d]);
      EXPECT_EQ(-b.a()[d] + b.b()[d], b.v_min()[d]);
    }
}

TEST(ViewpointBounds, PaperRanges) {
  const auto b = paper_full_bounds();
  EXPECT_EQ(b.v_min(), (Vec6{-180, -30, 20, -0.5, -1, -0.5}));
  EXPECT_EQ(b.v_max(), (Vec6{180, 30, 160, 0.5, 1, 0.5}));
}

TEST(ViewpointBounds, RejectsEmptyOrInvertedRanges) {
  EXPECT_THROW(ViewpointBounds({0, 0, 0, 0, 0, 0}, {1, 1, 0, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(ViewpointBounds({0, 0, 0, 0, 0, 0}, {1, 1, -1, 1, 1, 1}), InvalidArgument);
}

TEST(Viewpoint, ConstructionChecksBounds) {
  EXPECT_NO_THROW(Viewpoint({0, 0, 20, 0, 0, 0}, paper_full_bounds()));
  EXPECT_THROW(Viewpoint({0, 31, 90, 0, 0, 0}, paper_full_bounds()), BoundsError);
  EXPECT_THROW(Viewpoint({0, 0, 90, 0, 1.5, 0}, paper_full_bounds()), BoundsError);
}

TEST(ViewpointToPose, IdentityLooksAtOriginFromInitialCenter) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({0, 0, 0, 0, 0, 0}, b), b);
  expect_vec_near(p.center, {0, 4, 0}, 0.0);
  expect_vec_near(p.forward(), {0, -1, 0}, 1e-15);
  EXPECT_GT(p.up().z, 0.99);
}

TEST(ViewpointToPose, PureTranslation) {
  const auto b = wide_bounds();
  expect_vec_near(viewpoint_to_pose(Viewpoint({0, 0, 0, 0, -1, 0}, b), b).center, {0, 3, 0}, 1e-15);
}

TEST(ViewpointToPose, HalfTurnYaw) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({180, 0, 0, 0, 0, 0}, b), b);
  expect_vec_near(p.center, {0, -4, 0}, 1e-9);
  expect_vec_near(p.forward(), {0, 1, 0}, 1e-9);
}

TEST(ViewpointToPose, RotationOrbitsAtConstantRadiusAndKeepsLookingAtOrigin) {
  const auto b = wide_bounds();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    Vec6 v{};
    for (std::size_t d = 0; d < 3; ++d) v[d] = b.v_min()[d] + u(gen) * (b.v_max()[d] - b.v_min()[d]);
    const CameraPose p = viewpoint_to_pose(Viewpoint(v, b), b);
    ASSERT_NEAR(norm(p.center), 4.0, 1e-9);
    const Vec3 to_origin = normalized(-p.center);
    ASSERT_NEAR(dot(p.forward(), to_origin), 1.0, 1e-9);
    ASSERT_LE(max_abs_diff(p.rotation.transposed() * p.rotation, Mat3::identity()), 1e-9);
  }
}

TEST(ViewpointToPose, TranslationIsInWorldAxes) {
  const auto b = wide_bounds();
  const CameraPose p0 = viewpoint_to_pose(Viewpoint({40, 10, 25, 0, 0, 0}, b), b);
  const CameraPose p1 = viewpoint_to_pose(Viewpoint({40, 10, 25, 0.5, -0.25, 1}, b), b);
  expect_vec_near(p1.center - p0.center, {0.5, -0.25, 1}, 1e-12);
  EXPECT_LE(max_abs_diff(p0.rotation, p1.rotation), 0.0);
}

TEST(GenerateRays, SinglePixelLooksForward) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({25, -10, 70, 0.1, 0, 0}, b), b);
  const auto rays = generate_rays(p, 1, 1, 60, 2, 6);
  ASSERT_EQ(rays.size(), 1u);
  expect_vec_near(rays[0].direction, p.forward(), 1e-12);
  expect_vec_near(rays[0].origin, p.center, 0.0);
}

TEST(GenerateRays, OddImageCentralRayIsForward) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({-70, 30, 10, 0, 0, 0}, b), b);
  const auto rays = generate_rays(p, 5, 7, 45, 1, 3);
  expect_vec_near(rays[3 * 5 + 2].direction, p.forward(), 1e-9);
}

TEST(GenerateRays, CornerAnglesMatchPinholeClosedForm) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({10, 20, 30, 0, 0, 0}, b), b);
  const auto rays = generate_rays(p, 3, 3, 90, 1, 5);
  // Pixel centres of a 3x3 image sit at normalized offsets -2/3, 0, 2/3 of
  // tan(fov/2) = 1 along each image axis.
  const double corner = std::atan(std::sqrt(2.0) * 2.0 / 3.0);
  const double edge = std::atan(2.0 / 3.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const Ray& ray = rays[static_cast<std::size_t>(3 * r + c)];
      EXPECT_NEAR(norm(ray.direction), 1.0, 1e-12);
      const double angle = std::acos(std::clamp(dot(ray.direction, p.forward()), -1.0, 1.0));
      const int off = (r != 1) + (c != 1);
      EXPECT_NEAR(angle, off == 2 ? corner : (off == 1 ? edge : 0.0), 1e-9);
    }
  // Row 0 is the top of the image, column 0 the left.
  EXPECT_GT(dot(rays[0].direction, p.up()), 0.0);
  EXPECT_LT(dot(rays[0].direction, p.right()), 0.0);
  EXPECT_LT(dot(rays[8].direction, p.up()), 0.0);
}

TEST(GenerateRays, CountOrderAndRange) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({0, 0, 0, 0, 0, 0}, b), b);
  const auto rays = generate_rays(p, 4, 3, 60, 2, 6);
  ASSERT_EQ(rays.size(), 12u);
  for (const auto& r : rays) {
    EXPECT_EQ(r.t_near, 2.0);
    EXPECT_EQ(r.t_far, 6.0);
  }
  // Horizontal neighbours share a row: same vertical component.
  EXPECT_NEAR(dot(rays[4].direction, p.up()), dot(rays[7].direction, p.up()), 1e-12);
  EXPECT_GT(dot(rays[5].direction, p.right()), dot(rays[4].direction, p.right()));
}

TEST(GenerateRays, RejectsDegenerateInputs) {
  const auto b = wide_bounds();
  const CameraPose p = viewpoint_to_pose(Viewpoint({0, 0, 0, 0, 0, 0}, b), b);
  EXPECT_THROW(generate_rays(p, 0, 4, 60, 2, 6), InvalidArgument);
  EXPECT_THROW(generate_rays(p, 4, 4, 0, 2, 6), InvalidArgument);
  EXPECT_THROW(generate_rays(p, 4, 4, 180, 2, 6), InvalidArgument);
  EXPECT_THROW(generate_rays(p, 4, 4, 60, 6, 2), InvalidArgument);
  EXPECT_THROW(generate_rays(p, 4, 4, 60, -1, 2), InvalidArgument);
}

}  // namespace
}  // namespace viewfool
