// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/geometry.hpp"
#include "viewfool/image.hpp"
#include "viewfool/parallel.hpp"
#include "viewfool/radiance_field.hpp"
#include "viewfool/rng.hpp"

namespace viewfool {

struct RenderConfig {
  int samples_per_ray = 32;
  bool stratified = false;  // false: bin midpoints
  Rgb background{1.0, 1.0, 1.0};
  int width = 64;
  int height = 64;
  double fov_deg = 60.0;
  double t_near = 2.0;
  double t_far = 6.0;
  std::uint64_t rng_seed = 0;
  Vec3 init_center = kDefaultInitCenter;

  void validate() const {
    if (samples_per_ray < 2) throw InvalidArgument("samples_per_ray must be at least 2");
    for (double c : {background.r, background.g, background.b})
      if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("background channels must lie in [0,1]");
  }
};

/// Writes out.size() increasing depths in [ray.t_near, ray.t_far): one per
/// equal-width bin, at the bin midpoint or uniformly jittered inside it.
template <typename Gen>
void fill_quadrature(const Ray& ray, bool stratified, Gen& rng, std::span<double> out) {
  const std::size_t n = out.size();
  const double width = (ray.t_far - ray.t_near) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double offset = stratified ? rng.uniform() : 0.5;
    out[i] = ray.t_near + (static_cast<double>(i) + offset) * width;
  }
}

template <typename Gen>
std::vector<double> sample_quadrature(const Ray& ray, int n, bool stratified, Gen& rng) {
  if (n < 2) throw InvalidArgument("need at least 2 quadrature points");
  std::vector<double> t(static_cast<std::size_t>(n));
  fill_quadrature(ray, stratified, rng, t);
  return t;
}

/// Alpha compositing along one ray:
///   w_i = T_i * (1 - exp(-tau_i * delta_i)),  T_i = exp(-sum_{j<i} tau_j delta_j)
/// with delta_i = t_{i+1} - t_i and the last interval closed at t_far. The
/// residual transmittance 1 - sum(w_i) goes to the background. When
/// `weights` is non-empty it receives w_i.
template <typename Field>
Rgb composite_ray(const Field& field, const Ray& ray, std::span<const double> t, Rgb background,
                  std::span<double> weights = {}) {
  double optical_depth = 0.0;
  double total_weight = 0.0;
  Rgb acc;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = (i + 1 < n ? t[i + 1] : ray.t_far) - t[i];
    const Vec3 x = ray.at(t[i]);
    const double tau = field.density_at(x);
    double w = 0.0;
    if (tau > 0.0) {
      const double transmittance = std::exp(-optical_depth);
      w = transmittance * -std::expm1(-tau * delta);
      const Rgb c = field.sample(x, ray.direction).color;
      acc.r += w * c.r;
      acc.g += w * c.g;
      acc.b += w * c.b;
      total_weight += w;
      optical_depth += tau * delta;
    }
    if (!weights.empty()) weights[i] = w;
  }
  const double rest = 1.0 - total_weight;
  return {acc.r + rest * background.r, acc.g + rest * background.g, acc.b + rest * background.b};
}

template <typename Field>
Rgb composite_ray(const Field& field, const Ray& ray, const std::vector<double>& t, Rgb background) {
  return composite_ray(field, ray, std::span<const double>(t), background);
}

/// Renders `field` from viewpoint `v`. Per-pixel jitter streams are keyed on
/// (rng_seed, pixel index), so output is identical for any `jobs`.
inline ImageBuffer render(const VoxelField& field, const Viewpoint& v, const ViewpointBounds& bounds,
                          const RenderConfig& cfg, int jobs = 1) {
  cfg.validate();
  const CameraPose pose = viewpoint_to_pose(v, bounds, cfg.init_center);
  const std::vector<Ray> rays = generate_rays(pose, cfg.width, cfg.height, cfg.fov_deg, cfg.t_near, cfg.t_far);
  ImageBuffer img(cfg.width, cfg.height);
  const std::size_t n_samples = static_cast<std::size_t>(cfg.samples_per_ray);

  auto shade_rows = [&](std::size_t row) {
    std::vector<double> t(n_samples);
    for (int col = 0; col < cfg.width; ++col) {
      const std::size_t pixel = row * static_cast<std::size_t>(cfg.width) + static_cast<std::size_t>(col);
      StreamRng rng(mix_seed(cfg.rng_seed, pixel));
      fill_quadrature(rays[pixel], cfg.stratified, rng, t);
      Rgb c = composite_ray(field, rays[pixel], std::span<const double>(t), cfg.background);
      c = {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
      img.set(pixel, c);
    }
  };
  parallel_for(static_cast<std::size_t>(cfg.height), jobs, shade_rows);
  return img;
}

}  // namespace viewfool
