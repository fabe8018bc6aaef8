// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "viewfool/config.hpp"
#include "viewfool/harness.hpp"
#include "viewfool/scenario.hpp"

namespace viewfool {

inline RenderConfig render_config_from(const Config& c) {
  RenderConfig rc;
  rc.width = static_cast<int>(c.integer("width"));
  rc.height = static_cast<int>(c.integer("height"));
  rc.fov_deg = c.real("fov_deg");
  rc.samples_per_ray = static_cast<int>(c.integer("samples_per_ray"));
  rc.stratified = c.boolean("stratified");
  rc.t_near = c.real("t_near");
  rc.t_far = c.real("t_far");
  const auto bg = c.reals("background");
  if (bg.size() != 3) throw ConfigError("background needs three values");
  rc.background = {bg[0], bg[1], bg[2]};
  try {
    rc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("render settings: ") + e.what());
  }
  return rc;
}

inline SearchSpace search_space_from(const Config& c) {
  return make_search_space(bounds_from_config(c), parse_search_mode(search_mode_name(c)));
}

inline WedgeParams wedge_params_from(const Config& c) {
  WedgeParams p;
  p.render = render_config_from(c);
  p.classifier_input = static_cast<int>(c.integer_at_least("classifier_input", 1));
  p.logit_scale = c.real("logit_scale");
  if (!(p.logit_scale > 0.0)) throw ConfigError("logit_scale must be positive");
  return p;
}

inline AttackConfig attack_config_from(const Config& c, int jobs) {
  AttackConfig a;
  a.lambda = c.real("lambda");
  a.k = static_cast<int>(c.integer("k"));
  a.iterations = static_cast<int>(c.integer("iterations"));
  a.adam = {c.real("lr"), c.real("beta1"), c.real("beta2"), c.real("adam_eps")};
  a.space = search_space_from(c);
  a.seed = static_cast<std::uint64_t>(c.integer("seed"));
  a.baseline_on = c.boolean("baseline");
  a.sigma_floor = c.real("sigma_floor");
  a.mu_init = c.real("mu_init");
  a.sigma_init = c.real("sigma_init");
  a.jobs = jobs;
  try {
    a.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("attack settings: ") + e.what());
  }
  return a;
}

/// Parses "builtin:marker:<yaw>"; empty when `scene` names something else.
inline std::optional<double> builtin_marker_yaw(const std::string& scene) {
  constexpr std::string_view prefix = "builtin:marker:";
  if (scene.rfind(prefix, 0) != 0) return std::nullopt;
  double yaw;
  if (!detail::parse_real(std::string_view(scene).substr(prefix.size()), yaw))
    throw ConfigError("bad marker yaw in scene '" + scene + "'");
  return yaw;
}

inline SceneSpec scene_from(const Config& c) {
  const std::string& s = c.text("scene");
  if (auto yaw = builtin_marker_yaw(s)) {
    WedgeParams p = wedge_params_from(c);
    p.marker_yaw_deg = *yaw;
    p.name = "marker_y" + detail::trim(s.substr(15));
    return make_wedge_scene(p);
  }
  if (s.rfind("builtin:", 0) == 0) {
    PrimitiveKind kind;
    const std::string name = s.substr(8);
    if (name == "sphere") kind = PrimitiveKind::sphere;
    else if (name == "box") kind = PrimitiveKind::box;
    else if (name == "two-tone-cube") kind = PrimitiveKind::two_tone_cube;
    else throw ConfigError("unknown builtin scene '" + s + "'");
    return SceneSpec{build_primitive_scene(kind, {32, 32, 32}, PrimitiveParams{}), 0, name};
  }
  if (!std::filesystem::exists(s)) throw ConfigError("scene file not found: " + s);
  try {
    return load_scene(s);
  } catch (const Error& e) {
    throw ConfigError("cannot load scene " + s + ": " + e.what());
  }
}

inline ClassifierSpec external_classifier_from(const Config& c) {
  const std::string& cmd = c.text("oracle_command");
  if (cmd.empty()) throw ConfigError("classifier = external needs oracle_command");
  const int n = static_cast<int>(c.integer_at_least("classifier_input", 1));
  return make_external_classifier(cmd, static_cast<int>(c.integer_at_least("oracle_classes", 2)), n, n,
                                  static_cast<int>(c.integer_at_least("oracle_timeout_ms", 1)));
}

/// Scene, classifier, search space and render settings of one run.
inline Scenario scenario_from(const Config& c) {
  SearchSpace space = search_space_from(c);
  const std::string& s = c.text("scene");
  if (c.text("classifier") == "builtin") {
    auto yaw = builtin_marker_yaw(s);
    if (!yaw) scene_from(c);  // a missing scene file is the more useful error
    if (!yaw) throw ConfigError("classifier = builtin needs a builtin:marker:<yaw> scene");
    WedgeParams p = wedge_params_from(c);
    p.marker_yaw_deg = *yaw;
    p.name = scene_from(c).name;
    return make_wedge_scenario(p, std::move(space));
  }
  SceneSpec scene = scene_from(c);
  std::string name = scene.name;
  return Scenario{name, std::move(scene), external_classifier_from(c), std::move(space), render_config_from(c)};
}

/// The toy scene suite with the builtin classifier of each scene.
inline std::vector<Scenario> suite_from(const Config& c) {
  if (c.text("classifier") != "builtin") throw ConfigError("the toy suite uses the builtin classifier");
  const int n = static_cast<int>(c.integer("suite_size"));
  if (n < 1 || n > kMaxSuiteSize) throw ConfigError("suite_size must lie in [1, 6]");
  std::vector<Scenario> out;
  for (const auto& p : toy_suite_params(n, wedge_params_from(c))) out.push_back(make_wedge_scenario(p, search_space_from(c)));
  return out;
}

}  // namespace viewfool
