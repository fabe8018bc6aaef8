// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "viewfool/classifier.hpp"
#include "viewfool/distribution.hpp"
#include "viewfool/optimizer.hpp"
#include "viewfool/parallel.hpp"
#include "viewfool/renderer.hpp"
#include "viewfool/rng.hpp"
#include "viewfool/scenario.hpp"

namespace viewfool {

/// Which viewpoint components an experiment searches over.
enum class SearchMode { combined, translation_only, rotation_only, transform_2d };

inline SearchMode parse_search_mode(std::string_view s) {
  if (s == "combined") return SearchMode::combined;
  if (s == "translation") return SearchMode::translation_only;
  if (s == "rotation") return SearchMode::rotation_only;
  if (s == "2d") return SearchMode::transform_2d;
  throw InvalidArgument("unknown search mode '" + std::string(s) + "' (expected combined, translation, rotation, 2d)");
}

inline std::string_view to_string(SearchMode m) {
  switch (m) {
    case SearchMode::combined: return "combined";
    case SearchMode::translation_only: return "translation";
    case SearchMode::rotation_only: return "rotation";
    case SearchMode::transform_2d: return "2d";
  }
  return "?";
}

/// Translation-only pins the rotation to (0, 0, 65) degrees when that lies
/// in the bounds (the midpoint otherwise); rotation-only pins the offsets to
/// zero; 2d pins yaw and roll to their midpoints and searches pitch plus
/// offsets.
inline SearchSpace make_search_space(const ViewpointBounds& bounds, SearchMode mode) {
  const Vec6& lo = bounds.v_min();
  const Vec6& hi = bounds.v_max();
  auto pick = [&](std::size_t d, double preferred) {
    return preferred >= lo[d] && preferred <= hi[d] ? preferred : bounds.b()[d];
  };
  Vec6 fixed = bounds.b();
  std::array<bool, 6> active{true, true, true, true, true, true};
  switch (mode) {
    case SearchMode::combined:
      break;
    case SearchMode::translation_only:
      active = {false, false, false, true, true, true};
      if (pick(kPsi, 0.0) == 0.0 && pick(kTheta, 0.0) == 0.0 && pick(kPhi, 65.0) == 65.0)
        fixed = {0.0, 0.0, 65.0, 0, 0, 0};
      break;
    case SearchMode::rotation_only:
      active = {true, true, true, false, false, false};
      for (std::size_t d = kDx; d <= kDz; ++d) fixed[d] = pick(d, 0.0);
      break;
    case SearchMode::transform_2d:
      active = {false, true, false, true, true, true};
      break;
  }
  return SearchSpace(bounds, active, fixed);
}

/// Success rates and spread for one object. `rate_opt` is absent for
/// baselines that have no distribution mean.
struct AttackReport {
  std::string object;
  std::string method;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double rate_dist = 0.0;
  std::optional<double> rate_opt;
  std::optional<double> proxy_real_rate;  // v* under reseeded stratified jitter
  Vec6 param_std{};
  std::uint64_t queries = 0;
  int eval_samples = 0;
  std::optional<DistributionParams> params;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Population standard deviation of each viewpoint component.
inline Vec6 viewpoint_std(const std::vector<Viewpoint>& views) {
  Vec6 out{};
  if (views.empty()) return out;
  const double n = static_cast<double>(views.size());
  for (std::size_t d = 0; d < 6; ++d) {
    double mean = 0.0;
    for (const auto& v : views) mean += v[d];
    mean /= n;
    double var = 0.0;
    for (const auto& v : views) var += (v[d] - mean) * (v[d] - mean);
    out[d] = std::sqrt(var / n);
  }
  return out;
}

inline Viewpoint uniform_viewpoint(const SearchSpace& space, Rng& rng) {
  Vec6 v{};
  for (std::size_t d = 0; d < 6; ++d) v[d] = rng.uniform(space.bounds.v_min()[d], space.bounds.v_max()[d]);
  return space.pin(Viewpoint(v, space.bounds));
}

struct RandomSearchResult {
  double rate = 0.0;
  std::vector<Viewpoint> samples;
  std::vector<bool> hits;
};

/// Uniform search over the box with an arbitrary success predicate.
/// Viewpoints are drawn sequentially; the predicate runs on `jobs` threads.
inline RandomSearchResult random_search(const SearchSpace& space, std::size_t budget, Rng& rng,
                                        const std::function<bool(const Viewpoint&)>& adversarial, int jobs = 1) {
  if (budget < 1) throw InvalidArgument("random search budget must be at least 1");
  RandomSearchResult out;
  out.samples.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) out.samples.push_back(uniform_viewpoint(space, rng));
  std::vector<char> hit(budget, 0);
  parallel_for(budget, jobs, [&](std::size_t i) { hit[i] = adversarial(out.samples[i]) ? 1 : 0; });
  std::size_t count = 0;
  out.hits.resize(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    out.hits[i] = hit[i] != 0;
    count += out.hits[i] ? 1 : 0;
  }
  out.rate = static_cast<double>(count) / static_cast<double>(budget);
  return out;
}

inline AttackReport random_search_baseline(const Scenario& sc, std::size_t budget, Rng& rng, int jobs = 1) {
  const auto res = random_search(sc.space, budget, rng, [&](const Viewpoint& v) { return sc.misclassified_at(v); }, jobs);
  AttackReport r;
  r.object = sc.name;
  r.method = "random_search";
  r.rate_dist = res.rate;
  r.param_std = viewpoint_std(res.samples);
  r.queries = budget;
  r.eval_samples = static_cast<int>(budget);
  return r;
}

/// Draws n viewpoints from p(v) (frozen components pinned).
inline std::vector<Viewpoint> posterior_viewpoints(const DistributionParams& params, const SearchSpace& space,
                                                   std::size_t n, Rng& rng) {
  std::vector<Viewpoint> out;
  out.reserve(n);
  for (const auto& s : sample_viewpoints(params, space.bounds, n, rng)) out.push_back(space.pin(s.v));
  return out;
}

/// Misclassified fraction over n renders sampled from p(v). Draws happen up
/// front, so the result is fixed by the generator state regardless of jobs.
inline double evaluate_distribution(const DistributionParams& params, const Scenario& sc, std::size_t n, Rng& rng,
                                    int jobs = 1) {
  if (n < 1) throw InvalidArgument("need at least one evaluation sample");
  const auto views = posterior_viewpoints(params, sc.space, n, rng);
  std::vector<char> hit(n, 0);
  parallel_for(n, jobs, [&](std::size_t i) { hit[i] = sc.misclassified_at(views[i]) ? 1 : 0; });
  std::size_t count = 0;
  for (char h : hit) count += static_cast<std::size_t>(h);
  return static_cast<double>(count) / static_cast<double>(n);
}

/// Success fraction over n viewpoints drawn uniformly from
/// v* +/- (v_max - v_min) * r/100 per searched component, clipped to bounds.
inline double fluctuation_test(const Viewpoint& v_star, const Scenario& sc, double r_percent, std::size_t n, Rng& rng,
                               int jobs = 1) {
  if (!(r_percent > 0.0 && r_percent <= 100.0)) throw InvalidArgument("r_percent must lie in (0, 100]");
  const auto& b = sc.space.bounds;
  std::vector<Viewpoint> views;
  views.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec6 v = v_star.values();
    for (std::size_t d = 0; d < 6; ++d) {
      const double half = (b.v_max()[d] - b.v_min()[d]) * r_percent / 100.0;
      const double x = rng.uniform(v_star[d] - half, v_star[d] + half);
      v[d] = std::clamp(x, b.v_min()[d], b.v_max()[d]);
    }
    views.push_back(sc.space.pin(Viewpoint(v, b)));
  }
  std::vector<char> hit(n, 0);
  parallel_for(n, jobs, [&](std::size_t i) { hit[i] = sc.misclassified_at(views[i]) ? 1 : 0; });
  std::size_t count = 0;
  for (char h : hit) count += static_cast<std::size_t>(h);
  return static_cast<double>(count) / static_cast<double>(n);
}

/// Fraction of `trials` stratified re-renders of v* (fresh jitter seeds)
/// that are misclassified. Stands in for a photograph at v*.
inline double perturbed_render_proxy(const Viewpoint& v_star, const Scenario& sc, int trials, std::uint64_t seed) {
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    RenderConfig rc = sc.render;
    rc.stratified = true;
    rc.rng_seed = mix_seed(seed, 0xF00D, static_cast<std::uint64_t>(i));
    hits += is_misclassified(sc.classifier, render(sc.scene.field, v_star, sc.space.bounds, rc), sc.scene.label) ? 1 : 0;
  }
  return trials > 0 ? static_cast<double>(hits) / trials : 0.0;
}

/// Seed for posterior evaluation draws; independent of lambda so runs that
/// differ only in lambda are compared on common draws.
inline std::uint64_t evaluation_seed(std::uint64_t seed) { return mix_seed(seed, 0xE7A1); }

struct ViewFoolRun {
  AttackResult result;
  AttackReport report;
};

/// One ViewFool attack followed by the standard metrics.
inline ViewFoolRun run_viewfool(const Scenario& sc, const AttackConfig& cfg, std::size_t eval_samples = 100,
                                int proxy_trials = 0) {
  ViewFoolRun run{run_attack(sc.scene, sc.classifier, sc.render, cfg), {}};
  AttackReport& r = run.report;
  r.object = sc.name;
  r.method = "viewfool";
  r.lambda = cfg.lambda;
  r.seed = cfg.seed;
  r.queries = run.result.trace.queries;
  r.params = run.result.params;
  Rng eval_rng(evaluation_seed(cfg.seed));
  const auto views = posterior_viewpoints(run.result.params, sc.space, eval_samples, eval_rng);
  std::size_t hits = 0;
  for (const auto& v : views) hits += sc.misclassified_at(v) ? 1 : 0;
  r.rate_dist = static_cast<double>(hits) / static_cast<double>(eval_samples);
  r.param_std = viewpoint_std(views);
  r.eval_samples = static_cast<int>(eval_samples);
  const Viewpoint v_star = optimal_viewpoint(run.result.params, sc.space);
  r.rate_opt = sc.misclassified_at(v_star) ? 1.0 : 0.0;
  if (proxy_trials > 0) r.proxy_real_rate = perturbed_render_proxy(v_star, sc, proxy_trials, cfg.seed);
  return run;
}

/// entry(i, j): rate of source distribution i (on its own scenario) against
/// target classifier j. Each row reuses one draw seed across columns, so a
/// column holding the source's own classifier reproduces its rate_dist.
inline std::vector<std::vector<double>> transferability_matrix(const std::vector<DistributionParams>& params_per_source,
                                                               const std::vector<Scenario>& sources,
                                                               const std::vector<ClassifierSpec>& targets,
                                                               std::size_t n, std::uint64_t seed, int jobs = 1) {
  if (params_per_source.size() != sources.size()) throw InvalidArgument("one scenario per source distribution");
  std::vector<std::vector<double>> m(sources.size(), std::vector<double>(targets.size(), 0.0));
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = 0; j < targets.size(); ++j) {
      Scenario sc = sources[i];
      sc.classifier = targets[j];
      Rng rng(mix_seed(seed, i));
      m[i][j] = evaluate_distribution(params_per_source[i], sc, n, rng, jobs);
    }
  return m;
}

struct LambdaSweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double rate_dist = 0.0;
  double rate_opt = 0.0;
  Vec6 param_std{};
  Vec6 sigma{};
  double final_mean_loss = 0.0;
  std::vector<double> loss_curve;
  DistributionParams params;
};

/// Runs every (lambda, seed) cell, `jobs` cells at a time. Rows come back in
/// (lambda, seed) order.
inline std::vector<LambdaSweepRow> lambda_sweep(const Scenario& sc, const AttackConfig& base,
                                                const std::vector<double>& lambdas,
                                                const std::vector<std::uint64_t>& seeds, std::size_t eval_samples = 100,
                                                int jobs = 1) {
  std::vector<LambdaSweepRow> rows(lambdas.size() * seeds.size());
  parallel_for(rows.size(), jobs, [&](std::size_t cell) {
    AttackConfig cfg = base;
    cfg.lambda = lambdas[cell / seeds.size()];
    cfg.seed = seeds[cell % seeds.size()];
    cfg.jobs = 1;
    const ViewFoolRun run = run_viewfool(sc, cfg, eval_samples);
    LambdaSweepRow& row = rows[cell];
    row.lambda = cfg.lambda;
    row.seed = cfg.seed;
    row.rate_dist = run.report.rate_dist;
    row.rate_opt = *run.report.rate_opt;
    row.param_std = run.report.param_std;
    row.sigma = run.result.params.sigma;
    row.params = run.result.params;
    for (const auto& rec : run.result.trace.records) row.loss_curve.push_back(rec.mean_loss);
    row.final_mean_loss = row.loss_curve.empty() ? 0.0 : row.loss_curve.back();
  });
  return rows;
}

/// Seed-averaged posterior std per lambda, in the order lambdas first appear.
inline std::vector<std::pair<double, Vec6>> mean_std_by_lambda(const std::vector<LambdaSweepRow>& rows) {
  std::vector<std::pair<double, Vec6>> out;
  std::vector<int> counts;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.lambda; });
    if (it == out.end()) {
      out.push_back({r.lambda, Vec6{}});
      counts.push_back(0);
      it = out.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - out.begin());
    for (std::size_t d = 0; d < 6; ++d) it->second[d] += r.param_std[d];
    ++counts[idx];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (double& s : out[i].second) s /= counts[i];
  return out;
}

struct FluctuationRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int r_percent = 0;
  double rate = 0.0;
};

/// Seed for the perturbations at one (seed, r) point; independent of lambda.
inline std::uint64_t fluctuation_seed(std::uint64_t seed, int r_percent) {
  return mix_seed(seed, 0xF1C7, static_cast<std::uint64_t>(r_percent));
}

/// Attacks once per (lambda, seed) and measures the success rate around v*
/// at r = 1..r_max percent. Rows come back in (lambda, seed, r) order.
inline std::vector<FluctuationRow> fluctuation_curves(const Scenario& sc, const AttackConfig& base,
                                                      const std::vector<double>& lambdas,
                                                      const std::vector<std::uint64_t>& seeds, int r_max,
                                                      std::size_t n = 20, int jobs = 1) {
  if (r_max < 1 || r_max > 100) throw InvalidArgument("r_max must lie in [1, 100]");
  const std::size_t per_cell = static_cast<std::size_t>(r_max);
  std::vector<FluctuationRow> rows(lambdas.size() * seeds.size() * per_cell);
  parallel_for(lambdas.size() * seeds.size(), jobs, [&](std::size_t cell) {
    AttackConfig cfg = base;
    cfg.lambda = lambdas[cell / seeds.size()];
    cfg.seed = seeds[cell % seeds.size()];
    cfg.jobs = 1;
    const AttackResult res = run_attack(sc.scene, sc.classifier, sc.render, cfg);
    const Viewpoint v_star = optimal_viewpoint(res.params, sc.space);
    for (int r = 1; r <= r_max; ++r) {
      Rng rng(fluctuation_seed(cfg.seed, r));
      rows[cell * per_cell + static_cast<std::size_t>(r - 1)] = {cfg.lambda, cfg.seed, r,
                                                                 fluctuation_test(v_star, sc, r, n, rng)};
    }
  });
  return rows;
}

inline std::string fluctuation_csv(const std::vector<FluctuationRow>& rows) {
  std::ostringstream os;
  os << "lambda,seed,r_percent,rate\n";
  for (const auto& r : rows)
    os << format_double(r.lambda) << ',' << r.seed << ',' << r.r_percent << ',' << format_double(r.rate) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Dataset emission
// ---------------------------------------------------------------------------

struct DatasetSource {
  Scenario scenario;
  DistributionParams params;
};

struct ManifestRow {
  std::string file;
  std::string scene;
  std::string scene_file;
  std::uint32_t label = 0;
  Vec6 viewpoint{};
  std::uint64_t seed = 0;
  std::size_t index = 0;
};

inline nlohmann::json render_config_to_json(const RenderConfig& rc) {
  return {{"samples_per_ray", rc.samples_per_ray},
          {"stratified", rc.stratified},
          {"background", {rc.background.r, rc.background.g, rc.background.b}},
          {"width", rc.width},
          {"height", rc.height},
          {"fov_deg", rc.fov_deg},
          {"t_near", rc.t_near},
          {"t_far", rc.t_far},
          {"init_center", {rc.init_center.x, rc.init_center.y, rc.init_center.z}}};
}

inline RenderConfig render_config_from_json(const nlohmann::json& j) {
  RenderConfig rc;
  rc.samples_per_ray = j.at("samples_per_ray").get<int>();
  rc.stratified = j.at("stratified").get<bool>();
  const auto bg = j.at("background").get<std::array<double, 3>>();
  rc.background = {bg[0], bg[1], bg[2]};
  rc.width = j.at("width").get<int>();
  rc.height = j.at("height").get<int>();
  rc.fov_deg = j.at("fov_deg").get<double>();
  rc.t_near = j.at("t_near").get<double>();
  rc.t_far = j.at("t_far").get<double>();
  const auto c = j.at("init_center").get<std::array<double, 3>>();
  rc.init_center = {c[0], c[1], c[2]};
  return rc;
}

inline nlohmann::json bounds_to_json(const ViewpointBounds& b) { return {{"min", b.v_min()}, {"max", b.v_max()}}; }

/// Writes n_per_scene images per source (white background) under
/// out_dir/images, each scene under out_dir/scenes, and a JSON-lines
/// manifest at out_dir/manifest.jsonl. Every row carries the scene file,
/// bounds, render settings and seed, so it can be re-rendered on its own.
inline std::vector<ManifestRow> emit_dataset(const std::vector<DatasetSource>& sources, std::size_t n_per_scene,
                                             const RenderConfig& render_cfg, const std::filesystem::path& out_dir,
                                             std::uint64_t seed, int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "scenes");
  RenderConfig rc = render_cfg;
  rc.background = {1.0, 1.0, 1.0};
  rc.validate();

  std::vector<ManifestRow> rows;
  std::vector<nlohmann::json> lines;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const Scenario& sc = sources[s].scenario;
    const std::string scene_file = "scenes/" + std::to_string(s) + "_" + sc.scene.name + ".vfscene";
    save_scene(sc.scene, out_dir / scene_file);
    Rng rng(mix_seed(seed, s));
    const auto views = posterior_viewpoints(sources[s].params, sc.space, n_per_scene, rng);
    std::vector<ManifestRow> scene_rows(n_per_scene);
    parallel_for(n_per_scene, jobs, [&](std::size_t i) {
      ManifestRow& row = scene_rows[i];
      char name[64];
      std::snprintf(name, sizeof name, "images/%03zu_%05zu.png", s, i);
      row.file = name;
      row.scene = sc.scene.name;
      row.scene_file = scene_file;
      row.label = sc.scene.label;
      row.viewpoint = views[i].values();
      row.seed = mix_seed(seed, s, i);
      row.index = i;
      RenderConfig pixel_cfg = rc;
      pixel_cfg.rng_seed = row.seed;
      write_image(render(sc.scene.field, views[i], sc.space.bounds, pixel_cfg), out_dir / row.file);
    });
    for (auto& row : scene_rows) {
      lines.push_back({{"file", row.file},
                       {"scene", row.scene},
                       {"scene_file", row.scene_file},
                       {"label", row.label},
                       {"viewpoint", row.viewpoint},
                       {"seed", row.seed},
                       {"index", row.index},
                       {"bounds", bounds_to_json(sc.space.bounds)},
                       {"render", render_config_to_json(rc)}});
      rows.push_back(std::move(row));
    }
  }
  std::string manifest;
  for (const auto& j : lines) manifest += j.dump() + "\n";
  write_file(out_dir / "manifest.jsonl", manifest);
  return rows;
}

/// Re-renders one manifest line using only what it references.
inline ImageBuffer rerender_manifest_row(const nlohmann::json& row, const std::filesystem::path& dataset_dir) {
  const SceneSpec scene = load_scene(dataset_dir / row.at("scene_file").get<std::string>());
  const ViewpointBounds bounds(row.at("bounds").at("min").get<Vec6>(), row.at("bounds").at("max").get<Vec6>());
  RenderConfig rc = render_config_from_json(row.at("render"));
  rc.rng_seed = row.at("seed").get<std::uint64_t>();
  return render(scene.field, Viewpoint(row.at("viewpoint").get<Vec6>(), bounds), bounds, rc);
}

inline std::vector<nlohmann::json> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const AttackReport& r) {
  nlohmann::json j;
  j["object"] = r.object;
  j["method"] = r.method;
  j["lambda"] = r.lambda;
  j["seed"] = r.seed;
  j["rate_dist"] = r.rate_dist;
  j["rate_opt"] = r.rate_opt ? nlohmann::json(*r.rate_opt) : nlohmann::json(nullptr);
  j["proxy_real_rate"] = r.proxy_real_rate ? nlohmann::json(*r.proxy_real_rate) : nlohmann::json(nullptr);
  j["param_std"] = r.param_std;
  j["queries"] = r.queries;
  j["eval_samples"] = r.eval_samples;
  if (r.params) j["params"] = {{"mu", r.params->mu}, {"sigma", r.params->sigma}};
  return j;
}

inline const char* kReportCsvHeader =
    "object,method,lambda,seed,rate_dist,rate_opt,proxy_real_rate,std_psi,std_theta,std_phi,std_dx,std_dy,std_dz,"
    "queries,eval_samples\n";

inline std::string report_csv_row(const AttackReport& r) {
  std::ostringstream os;
  os << r.object << ',' << r.method << ',' << format_double(r.lambda) << ',' << r.seed << ','
     << format_double(r.rate_dist) << ',' << (r.rate_opt ? format_double(*r.rate_opt) : "") << ','
     << (r.proxy_real_rate ? format_double(*r.proxy_real_rate) : "");
  for (double s : r.param_std) os << ',' << format_double(s);
  os << ',' << r.queries << ',' << r.eval_samples << '\n';
  return os.str();
}

inline std::string reports_to_csv(const std::vector<AttackReport>& reports) {
  std::string out = kReportCsvHeader;
  for (const auto& r : reports) out += report_csv_row(r);
  return out;
}

inline std::string lambda_sweep_csv(const std::vector<LambdaSweepRow>& rows) {
  std::ostringstream os;
  os << "lambda,seed,rate_dist,rate_opt,std_psi,std_theta,std_phi,std_dx,std_dy,std_dz,final_mean_loss\n";
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << r.seed << ',' << format_double(r.rate_dist) << ','
       << format_double(r.rate_opt);
    for (double s : r.param_std) os << ',' << format_double(s);
    os << ',' << format_double(r.final_mean_loss) << '\n';
  }
  return os.str();
}

}  // namespace viewfool
