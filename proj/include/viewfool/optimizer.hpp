// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"
#include "viewfool/classifier.hpp"
#include "viewfool/distribution.hpp"
#include "viewfool/error.hpp"
#include "viewfool/estimator.hpp"
#include "viewfool/parallel.hpp"
#include "viewfool/radiance_field.hpp"
#include "viewfool/renderer.hpp"
#include "viewfool/rng.hpp"

namespace viewfool {

struct AdamHyper {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates; `t` counts steps already taken.
struct AdamState {
  GradientPair m;
  GradientPair v;
  int t = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamStepResult {
  DistributionParams params;
  AdamState state;
};

/// Bias-corrected Adam in the ascent direction; `t` is the 1-based index of
/// this step.
inline AdamStepResult adam_step(const DistributionParams& params, const GradientPair& grads, const AdamState& state,
                                int t, const AdamHyper& hyper) {
  if (t < 1) throw InvalidArgument("Adam step index starts at 1");
  AdamStepResult out{params, state};
  out.state.t = t;
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  auto update = [&](Vec6& theta, const Vec6& g, Vec6& m, Vec6& v) {
    for (std::size_t d = 0; d < 6; ++d) {
      m[d] = hyper.beta1 * m[d] + (1.0 - hyper.beta1) * g[d];
      v[d] = hyper.beta2 * v[d] + (1.0 - hyper.beta2) * g[d] * g[d];
      theta[d] += hyper.lr * (m[d] / c1) / (std::sqrt(v[d] / c2) + hyper.eps);
    }
  };
  update(out.params.mu, grads.grad_mu, out.state.m.grad_mu, out.state.v.grad_mu);
  update(out.params.sigma, grads.grad_sigma, out.state.m.grad_sigma, out.state.v.grad_sigma);
  return out;
}

struct AttackConfig {
  double lambda = 0.01;
  int k = 50;
  int iterations = 100;
  AdamHyper adam;
  SearchSpace space{paper_full_bounds()};
  std::uint64_t seed = 0;
  bool baseline_on = true;
  double sigma_floor = kSigmaFloor;
  double mu_init = 0.0;
  double sigma_init = 0.5;
  int jobs = 1;

  void validate() const {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (baseline_on && k < 2) throw InvalidArgument("baseline subtraction needs k >= 2");
    if (iterations < 0) throw InvalidArgument("iterations must be nonnegative");
    if (!(sigma_floor > 0.0)) throw InvalidArgument("sigma_floor must be positive");
    if (!(sigma_init >= sigma_floor)) throw InvalidArgument("sigma_init below sigma_floor");
    if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.eps > 0.0))
      throw InvalidArgument("invalid Adam hyperparameters");
  }
};

/// Everything needed to continue an attack bit-exactly.
struct AttackState {
  int iteration = 0;  // completed iterations
  DistributionParams params;
  AdamState adam;
  std::string rng_state;

  friend bool operator==(const AttackState&, const AttackState&) = default;
};

inline AttackState initial_attack_state(const AttackConfig& cfg) {
  AttackState s;
  s.params = DistributionParams::initial(cfg.mu_init, cfg.sigma_init);
  s.rng_state = Rng(cfg.seed).state();
  return s;
}

struct IterationRecord {
  int iteration = 0;
  double mean_loss = 0.0;
  double entropy = 0.0;  // MC estimate over the active dimensions, before the step
  Vec6 mu{};             // after the step
  Vec6 sigma{};
};

struct AttackTrace {
  std::vector<IterationRecord> records;
  std::uint64_t queries = 0;
  DistributionParams final_params;
};

struct AttackResult {
  DistributionParams params;
  AttackTrace trace;
  AttackState state;
};

struct AttackHooks {
  /// Called after every completed iteration with the resumable state.
  std::function<void(const AttackState&)> on_iteration;
};

/// Loss oracle: loss(v, iteration, sample_index). Must be safe to call
/// concurrently when cfg.jobs > 1.
using ViewLossFn = std::function<double(const Viewpoint&, int, std::size_t)>;

/// Maximizes E[loss] + lambda * H over (mu, sigma) from `start` until
/// cfg.iterations are complete.
inline AttackResult optimize_distribution(const ViewLossFn& loss, const AttackConfig& cfg, const AttackState& start,
                                          const AttackHooks& hooks = {}) {
  cfg.validate();
  const ViewpointBounds& bounds = cfg.space.bounds;
  const auto& active = cfg.space.active;
  AttackResult out;
  AttackState state = start;
  Rng rng;
  rng.set_state(state.rng_state);
  const auto k = static_cast<std::size_t>(cfg.k);

  for (int it = state.iteration; it < cfg.iterations; ++it) {
    const auto samples = sample_viewpoints(state.params, bounds, k, rng);
    std::vector<Viewpoint> views;
    views.reserve(k);
    for (const auto& s : samples) views.push_back(cfg.space.pin(s.v));

    std::vector<double> losses(k);
    try {
      parallel_for(k, cfg.jobs, [&](std::size_t i) { losses[i] = loss(views[i], it, i); });
    } catch (const std::exception& e) {
      throw Error("attack aborted at iteration " + std::to_string(it) + ": " + e.what());
    }
    out.trace.queries += k;

    EvalBatch batch;
    batch.reserve(k);
    std::vector<Vec6> eps;
    eps.reserve(k);
    double mean_loss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      batch.push_back({samples[i].epsilon, views[i], losses[i]});
      eps.push_back(samples[i].epsilon);
      mean_loss += losses[i];
    }
    mean_loss /= static_cast<double>(k);

    GradientPair g = combined_gradients(batch, state.params, bounds, cfg.lambda, cfg.baseline_on, cfg.sigma_floor);
    for (std::size_t d = 0; d < 6; ++d)
      if (!active[d]) g.grad_mu[d] = g.grad_sigma[d] = 0.0;

    IterationRecord rec;
    rec.iteration = it;
    rec.mean_loss = mean_loss;
    rec.entropy = entropy_from_epsilons(state.params, bounds, eps, active);

    auto step = adam_step(state.params, g, state.adam, it + 1, cfg.adam);
    for (double& s : step.params.sigma) s = std::max(s, cfg.sigma_floor);
    state.params = step.params;
    state.adam = step.state;
    state.iteration = it + 1;
    state.rng_state = rng.state();

    rec.mu = state.params.mu;
    rec.sigma = state.params.sigma;
    out.trace.records.push_back(rec);
    if (hooks.on_iteration) hooks.on_iteration(state);
  }
  out.params = state.params;
  out.trace.final_params = state.params;
  out.state = state;
  return out;
}

/// Transformed distribution mean a * tanh(mu) + b, with frozen dimensions pinned.
inline Viewpoint optimal_viewpoint(const DistributionParams& params, const SearchSpace& space) {
  return space.pin(transform_to_viewpoint(params.mu, space.bounds));
}
inline Viewpoint optimal_viewpoint(const DistributionParams& params, const ViewpointBounds& bounds) {
  return transform_to_viewpoint(params.mu, bounds);
}

/// Render seed used for sample `index` of iteration `iteration`.
inline std::uint64_t sample_render_seed(std::uint64_t seed, int iteration, std::size_t index) {
  return mix_seed(seed, static_cast<std::uint64_t>(iteration) + 1, index);
}

/// Cross-entropy of the classifier on the render of `v`.
inline double viewpoint_loss(const SceneSpec& scene, const ClassifierSpec& classifier, const Viewpoint& v,
                             const ViewpointBounds& bounds, const RenderConfig& render_cfg) {
  const ImageBuffer img = render(scene.field, v, bounds, render_cfg);
  return cross_entropy(predict(classifier, img), scene.label);
}

/// Black-box attack on `classifier` through renders of `scene`.
inline AttackResult run_attack_from(const SceneSpec& scene, const ClassifierSpec& classifier,
                                    const RenderConfig& render_cfg, const AttackConfig& cfg, const AttackState& start,
                                    const AttackHooks& hooks = {}) {
  if (scene.label >= static_cast<std::uint32_t>(classifier.class_count))
    throw InvalidArgument("scene label exceeds classifier class count");
  render_cfg.validate();
  const ViewLossFn loss = [&](const Viewpoint& v, int it, std::size_t i) {
    RenderConfig rc = render_cfg;
    rc.rng_seed = sample_render_seed(cfg.seed, it, i);
    return viewpoint_loss(scene, classifier, v, cfg.space.bounds, rc);
  };
  return optimize_distribution(loss, cfg, start, hooks);
}

inline AttackResult run_attack(const SceneSpec& scene, const ClassifierSpec& classifier, const RenderConfig& render_cfg,
                               const AttackConfig& cfg, const AttackHooks& hooks = {}) {
  return run_attack_from(scene, classifier, render_cfg, cfg, initial_attack_state(cfg), hooks);
}

// ---------------------------------------------------------------------------
// Checkpoints: a JSON document
//   {"format": "viewfool-checkpoint", "version": 1,
//    "config": {"seed", "k", "lambda", "iterations"},
//    "iteration", "mu", "sigma",
//    "adam": {"t", "m_mu", "m_sigma", "v_mu", "v_sigma"}, "rng_state"}
// Doubles are written in shortest round-trip form, so resume is bit-exact.
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const AttackState& s, const AttackConfig& cfg) {
  nlohmann::json j;
  j["format"] = "viewfool-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = {{"seed", cfg.seed}, {"k", cfg.k}, {"lambda", cfg.lambda}, {"iterations", cfg.iterations}};
  j["iteration"] = s.iteration;
  j["mu"] = s.params.mu;
  j["sigma"] = s.params.sigma;
  j["adam"] = {{"t", s.adam.t},
               {"m_mu", s.adam.m.grad_mu},
               {"m_sigma", s.adam.m.grad_sigma},
               {"v_mu", s.adam.v.grad_mu},
               {"v_sigma", s.adam.v.grad_sigma}};
  j["rng_state"] = s.rng_state;
  return j;
}

/// Parses a checkpoint and checks it was produced by a compatible config.
inline AttackState checkpoint_from_json(const nlohmann::json& j, const AttackConfig& cfg) {
  try {
    if (j.at("format").get<std::string>() != "viewfool-checkpoint") throw ParseError("not a viewfool checkpoint", 0);
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw VersionError("unsupported checkpoint version " + std::to_string(version));
    const auto& c = j.at("config");
    if (c.at("seed").get<std::uint64_t>() != cfg.seed || c.at("k").get<int>() != cfg.k ||
        c.at("lambda").get<double>() != cfg.lambda)
      throw ConfigError("checkpoint was written with a different seed, k or lambda");
    AttackState s;
    s.iteration = j.at("iteration").get<int>();
    s.params.mu = j.at("mu").get<Vec6>();
    s.params.sigma = j.at("sigma").get<Vec6>();
    const auto& a = j.at("adam");
    s.adam.t = a.at("t").get<int>();
    s.adam.m.grad_mu = a.at("m_mu").get<Vec6>();
    s.adam.m.grad_sigma = a.at("m_sigma").get<Vec6>();
    s.adam.v.grad_mu = a.at("v_mu").get<Vec6>();
    s.adam.v.grad_sigma = a.at("v_sigma").get<Vec6>();
    s.rng_state = j.at("rng_state").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

inline void save_checkpoint(const AttackState& s, const AttackConfig& cfg, const std::filesystem::path& path) {
  write_file(path, checkpoint_to_json(s, cfg).dump(2) + "\n");
}

inline AttackState load_checkpoint(const std::filesystem::path& path, const AttackConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), e.byte);
  }
  return checkpoint_from_json(j, cfg);
}

}  // namespace viewfool
