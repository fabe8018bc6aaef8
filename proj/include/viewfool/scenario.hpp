// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "viewfool/classifier.hpp"
#include "viewfool/distribution.hpp"
#include "viewfool/radiance_field.hpp"
#include "viewfool/renderer.hpp"

namespace viewfool {

inline RenderConfig wedge_render_config() {
  RenderConfig rc;
  rc.width = rc.height = 32;
  rc.fov_deg = 40.0;
  rc.samples_per_ray = 32;
  rc.t_near = 2.0;
  rc.t_far = 6.5;
  return rc;
}

/// A scene, the classifier under attack, the search space and how to render.
struct Scenario {
  std::string name;
  SceneSpec scene;
  ClassifierSpec classifier;
  SearchSpace space;
  RenderConfig render;

  bool misclassified_at(const Viewpoint& v) const {
    return is_misclassified(classifier, viewfool::render(scene.field, v, space.bounds, render), scene.label);
  }
  double loss_at(const Viewpoint& v) const {
    return cross_entropy(predict(classifier, viewfool::render(scene.field, v, space.bounds, render)), scene.label);
  }
};

/// Grey sphere with a colored cap. The classifier holds two templates: the
/// render from the natural pose (label 0) and the render that faces the
/// cap (label 1), so only a wedge of viewing directions around the cap
/// misclassifies.
struct WedgeParams {
  std::string name = "marker_y60";
  double marker_yaw_deg = 60.0;
  double marker_elev_deg = 20.0;
  double cap_half_angle_deg = 40.0;
  double radius = 0.7;
  Rgb body{0.55, 0.55, 0.55};
  Rgb marker{0.9, 0.15, 0.1};
  int voxels = 32;
  int classifier_input = 16;
  double logit_scale = 20.0;
  RenderConfig render = wedge_render_config();
};

inline SceneSpec make_wedge_scene(const WedgeParams& p) {
  PrimitiveParams prim;
  prim.size = p.radius;
  prim.color = p.body;
  prim.second_color = p.marker;
  prim.marker_yaw_deg = p.marker_yaw_deg;
  prim.marker_elev_deg = p.marker_elev_deg;
  prim.marker_half_angle_deg = p.cap_half_angle_deg;
  return SceneSpec{build_primitive_scene(PrimitiveKind::asymmetric_marker, {p.voxels, p.voxels, p.voxels}, prim), 0,
                   p.name};
}

/// The pose with zero rotation/translation offsets relative to the bounds
/// midpoint; what an attack starting at mu = 0 sees first.
inline Viewpoint natural_viewpoint(const SearchSpace& space) {
  return space.pin(Viewpoint(space.bounds.b(), space.bounds));
}

inline Viewpoint marker_facing_viewpoint(const WedgeParams& p, const ViewpointBounds& bounds) {
  Vec6 v = bounds.b();
  v[kPsi] = p.marker_yaw_deg;
  v[kTheta] = 0.0;
  v[kPhi] = p.marker_elev_deg;
  v[kDx] = v[kDy] = v[kDz] = 0.0;
  return Viewpoint(v, bounds);
}

inline Scenario make_wedge_scenario(const WedgeParams& p = {}, SearchSpace space = SearchSpace(toy_wedge_bounds())) {
  const RenderConfig& rc = p.render;
  rc.validate();
  SceneSpec scene = make_wedge_scene(p);
  std::vector<ImageBuffer> templates;
  for (const Viewpoint& v : {natural_viewpoint(space), marker_facing_viewpoint(p, space.bounds)})
    templates.push_back(
        resize_and_crop(render(scene.field, v, space.bounds, rc), p.classifier_input, p.classifier_input));
  ClassifierSpec clf = make_template_classifier(std::move(templates), p.logit_scale);
  return Scenario{p.name, std::move(scene), std::move(clf), std::move(space), rc};
}

inline constexpr int kMaxSuiteSize = 6;

/// Wedge variants with the cap at different yaws and colors.
inline std::vector<WedgeParams> toy_suite_params(int n, const WedgeParams& base = {}) {
  if (n < 1 || n > kMaxSuiteSize) throw InvalidArgument("suite size must lie in [1, 6]");
  static constexpr double kYaw[kMaxSuiteSize] = {60, -60, 150, -150, 105, -105};
  static constexpr Rgb kColor[kMaxSuiteSize] = {{0.9, 0.15, 0.1}, {0.1, 0.25, 0.9}, {0.1, 0.75, 0.2},
                                                {0.9, 0.8, 0.1},  {0.8, 0.1, 0.8},  {0.1, 0.8, 0.85}};
  std::vector<WedgeParams> out;
  for (int i = 0; i < n; ++i) {
    WedgeParams p = base;
    p.marker_yaw_deg = kYaw[i];
    p.marker = kColor[i];
    p.name = "marker_y" + std::to_string(static_cast<int>(kYaw[i]));
    out.push_back(p);
  }
  return out;
}

}  // namespace viewfool
