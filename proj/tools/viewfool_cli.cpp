// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// viewfool: attack, bench and render subcommands over one key = value
// configuration. Exit codes: 0 success, 2 configuration error, 3 runtime
// error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "viewfool/config.hpp"
#include "viewfool/harness.hpp"
#include "viewfool/run.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace viewfool;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> seed, preset, lambda, k, iters, experiment, viewpoint;
  std::vector<std::string> sets;
  int jobs = default_jobs();
  std::string out_dir = "viewfool_out";
  std::string resume;
  std::string output;
  bool dry_run = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (key seed)");
  sub->add_option("--preset", f.preset, "bounds/search preset (key preset)");
  sub->add_option("--lambda", f.lambda, "entropy weight (key lambda)");
  sub->add_option("--k", f.k, "samples per iteration (key k)");
  sub->add_option("--iters", f.iters, "iterations (key iterations)");
  sub->add_option("--set", f.sets, "override any key: --set key=value (repeatable)");
  sub->add_option("--jobs", f.jobs, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", f.out_dir, "artifact directory");
  sub->add_flag("--dry-run", f.dry_run, "print the resolved config and exit");
}

Config resolve_config(const CommonFlags& f) {
  Config c;
  if (!f.config_path.empty()) c.merge_file(f.config_path);
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
  c.merge_env(env);
  auto flag = [&](const std::optional<std::string>& v, std::string_view key, std::string_view name) {
    if (v) c.set(key, *v, name);
  };
  flag(f.seed, "seed", "--seed");
  flag(f.preset, "preset", "--preset");
  flag(f.lambda, "lambda", "--lambda");
  flag(f.k, "k", "--k");
  flag(f.iters, "iterations", "--iters");
  flag(f.experiment, "experiment", "--experiment");
  flag(f.viewpoint, "viewpoint", "--viewpoint");
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    c.set(detail::trim(std::string_view(s).substr(0, eq)), s.substr(eq + 1), "--set");
  }
  preset_spec(c.text("preset"));
  return c;
}

void write_text(const fs::path& p, const std::string& s) { write_file(p, s); }

std::vector<std::uint64_t> seed_list(const Config& c) {
  const auto base = static_cast<std::uint64_t>(c.integer("seed"));
  const auto n = c.integer_at_least("seeds", 1);
  std::vector<std::uint64_t> out;
  for (long long i = 0; i < n; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

std::string trace_csv(const AttackTrace& t) {
  std::string out = "iteration,mean_loss,entropy,mu_psi,mu_theta,mu_phi,mu_dx,mu_dy,mu_dz,"
                    "sigma_psi,sigma_theta,sigma_phi,sigma_dx,sigma_dy,sigma_dz\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  };
  for (const auto& r : t.records) {
    out += std::to_string(r.iteration);
    num(r.mean_loss);
    num(r.entropy);
    for (double m : r.mu) num(m);
    for (double s : r.sigma) num(s);
    out += '\n';
  }
  return out;
}

// --- subcommands -----------------------------------------------------------
// Each returns a callable: setup errors surface before it runs (exit 2);
// errors while it runs exit 3.

using Job = std::function<void()>;

Job plan_attack(const Config& c, const CommonFlags& f) {
  const fs::path out = f.out_dir;
  Scenario sc = scenario_from(c);
  AttackConfig cfg = attack_config_from(c, f.jobs);
  cfg.space = sc.space;
  const auto eval_n = static_cast<std::size_t>(c.integer_at_least("eval_samples", 1));
  const int proxy = static_cast<int>(c.integer_at_least("proxy_trials", 0));
  const int every = static_cast<int>(c.integer_at_least("checkpoint_every", 0));
  AttackState start = initial_attack_state(cfg);
  if (!f.resume.empty()) {
    try {
      start = load_checkpoint(f.resume, cfg);
    } catch (const Error& e) {
      throw ConfigError(std::string("--resume: ") + e.what());
    }
  }
  return [=] {
    fs::create_directories(out);
    const Viewpoint natural = natural_viewpoint(sc.space);
    if (sc.misclassified_at(natural))
      std::cerr << "warning: the natural viewpoint is already misclassified; the attack is vacuous\n";
    AttackHooks hooks;
    if (every > 0)
      hooks.on_iteration = [&](const AttackState& s) {
        if (s.iteration % every == 0) save_checkpoint(s, cfg, out / "checkpoint.json");
      };
    const AttackResult res = run_attack_from(sc.scene, sc.classifier, sc.render, cfg, start, hooks);
    save_checkpoint(res.state, cfg, out / "checkpoint.json");
    write_text(out / "trace.csv", trace_csv(res.trace));

    AttackReport r;
    r.object = sc.name;
    r.method = "viewfool";
    r.lambda = cfg.lambda;
    r.seed = cfg.seed;
    // Whole-attack budget, including iterations done before a resume.
    r.queries = static_cast<std::uint64_t>(res.state.iteration) * static_cast<std::uint64_t>(cfg.k);
    r.params = res.params;
    Rng eval_rng(evaluation_seed(cfg.seed));
    const auto views = posterior_viewpoints(res.params, sc.space, eval_n, eval_rng);
    std::vector<char> hit(eval_n, 0);
    parallel_for(eval_n, cfg.jobs, [&](std::size_t i) { hit[i] = sc.misclassified_at(views[i]) ? 1 : 0; });
    std::size_t hits = 0;
    for (char h : hit) hits += static_cast<std::size_t>(h);
    r.rate_dist = static_cast<double>(hits) / static_cast<double>(eval_n);
    r.param_std = viewpoint_std(views);
    r.eval_samples = static_cast<int>(eval_n);
    const Viewpoint v_star = optimal_viewpoint(res.params, sc.space);
    r.rate_opt = sc.misclassified_at(v_star) ? 1.0 : 0.0;
    if (proxy > 0) r.proxy_real_rate = perturbed_render_proxy(v_star, sc, proxy, cfg.seed);

    nlohmann::json j = report_to_json(r);
    j["v_star"] = v_star.values();
    write_text(out / "report.json", j.dump(2) + "\n");
    write_text(out / "report.csv", reports_to_csv({r}));
    write_image(render(sc.scene.field, v_star, sc.space.bounds, sc.render), out / "v_star.png");
    std::printf("rate_dist %.4f  rate_opt %.0f  queries %llu\n", r.rate_dist, *r.rate_opt,
                static_cast<unsigned long long>(r.queries));
  };
}

std::vector<AttackResult> attack_suite(const std::vector<Scenario>& suite, const AttackConfig& base, int jobs) {
  std::vector<AttackResult> res(suite.size());
  parallel_for(suite.size(), jobs, [&](std::size_t i) {
    AttackConfig cfg = base;
    cfg.space = suite[i].space;
    cfg.jobs = 1;
    res[i] = run_attack(suite[i].scene, suite[i].classifier, suite[i].render, cfg);
  });
  return res;
}

Job plan_bench(const Config& c, const CommonFlags& f) {
  const fs::path out = f.out_dir;
  const std::string exp = c.text("experiment");
  const int jobs = f.jobs;
  AttackConfig cfg = attack_config_from(c, jobs);
  const auto eval_n = static_cast<std::size_t>(c.integer_at_least("eval_samples", 1));
  const int proxy = static_cast<int>(c.integer_at_least("proxy_trials", 0));
  const auto lambdas = c.reals("lambdas");
  const auto seeds = seed_list(c);
  if ((exp == "lambda-sweep" || exp == "fluctuation") && lambdas.empty()) throw ConfigError("lambdas is empty");
  for (double l : lambdas)
    if (l < 0.0) throw ConfigError("lambdas must be nonnegative");
  long long budget = c.integer_at_least("random_budget", 0);
  if (budget == 0) budget = static_cast<long long>(cfg.k) * cfg.iterations;
  if (budget < 1) throw ConfigError("random search needs a positive budget");
  const int r_max = static_cast<int>(c.integer_at_least("fluct_max_percent", 1));
  if (r_max > 100) throw ConfigError("fluct_max_percent must be at most 100");
  const auto fluct_n = static_cast<std::size_t>(c.integer_at_least("fluct_samples", 1));
  const auto per_scene = static_cast<std::size_t>(c.integer_at_least("dataset_per_scene", 1));

  if (exp == "transfer" || exp == "emit-dataset") {
    auto suite = suite_from(c);
    RenderConfig rc = render_config_from(c);
    return [=] {
      fs::create_directories(out);
      const auto res = attack_suite(suite, cfg, jobs);
      std::vector<DistributionParams> params;
      for (const auto& r : res) params.push_back(r.params);
      if (exp == "transfer") {
        std::vector<ClassifierSpec> targets;
        for (const auto& s : suite) targets.push_back(s.classifier);
        const auto m = transferability_matrix(params, suite, targets, eval_n, cfg.seed, jobs);
        std::string csv = "source";
        for (const auto& s : suite) csv += "," + s.name;
        csv += "\n";
        for (std::size_t i = 0; i < m.size(); ++i) {
          csv += suite[i].name;
          for (double v : m[i]) csv += "," + format_double(v);
          csv += "\n";
        }
        write_text(out / "transfer.csv", csv);
      } else {
        std::vector<DatasetSource> sources;
        for (std::size_t i = 0; i < suite.size(); ++i) sources.push_back({suite[i], params[i]});
        const auto rows = emit_dataset(sources, per_scene, rc, out / "dataset", cfg.seed, jobs);
        std::printf("wrote %zu images\n", rows.size());
      }
    };
  }

  Scenario sc = scenario_from(c);
  cfg.space = sc.space;
  if (exp == "random-vs-viewfool") {
    return [=] {
      fs::create_directories(out);
      Rng rng(mix_seed(cfg.seed, 0x7A5D));
      const AttackReport rs = random_search_baseline(sc, static_cast<std::size_t>(budget), rng, jobs);
      const ViewFoolRun vf = run_viewfool(sc, cfg, eval_n, proxy);
      write_text(out / "comparison.csv", reports_to_csv({rs, vf.report}));
      write_text(out / "comparison.json",
                 nlohmann::json::array({report_to_json(rs), report_to_json(vf.report)}).dump(2) + "\n");
    };
  }
  if (exp == "lambda-sweep") {
    return [=] {
      fs::create_directories(out);
      const auto rows = lambda_sweep(sc, cfg, lambdas, seeds, eval_n, jobs);
      write_text(out / "lambda_sweep.csv", lambda_sweep_csv(rows));
      std::string summary = "lambda,std_psi,std_theta,std_phi,std_dx,std_dy,std_dz\n";
      for (const auto& [l, s] : mean_std_by_lambda(rows)) {
        summary += format_double(l);
        for (double v : s) summary += "," + format_double(v);
        summary += "\n";
      }
      write_text(out / "lambda_sweep_summary.csv", summary);
    };
  }
  if (exp == "fluctuation") {
    return [=] {
      fs::create_directories(out);
      write_text(out / "fluctuation.csv",
                 fluctuation_csv(fluctuation_curves(sc, cfg, lambdas, seeds, r_max, fluct_n, jobs)));
    };
  }
  // table1: the same scene under translation-only, rotation-only and combined search.
  return [=] {
    fs::create_directories(out);
    std::string csv = std::string("setting,") + kReportCsvHeader;
    nlohmann::json j = nlohmann::json::array();
    for (SearchMode mode : {SearchMode::translation_only, SearchMode::rotation_only, SearchMode::combined}) {
      Config cm = c;
      cm.set("search", std::string(to_string(mode)), "table1");
      const Scenario s = scenario_from(cm);
      AttackConfig ac = cfg;
      ac.space = s.space;
      Rng rng(mix_seed(cfg.seed, 0x7A5D));
      const AttackReport rs = random_search_baseline(s, static_cast<std::size_t>(budget), rng, jobs);
      const ViewFoolRun vf = run_viewfool(s, ac, eval_n, proxy);
      for (const auto* r : {&rs, &vf.report}) {
        csv += std::string(to_string(mode)) + "," + report_csv_row(*r);
        auto row = report_to_json(*r);
        row["setting"] = to_string(mode);
        j.push_back(row);
      }
    }
    write_text(out / "table1.csv", csv);
    write_text(out / "table1.json", j.dump(2) + "\n");
  };
}

Job plan_render(const Config& c, const CommonFlags& f) {
  const SceneSpec scene = scene_from(c);
  const SearchSpace space = search_space_from(c);
  RenderConfig rc = render_config_from(c);
  rc.rng_seed = static_cast<std::uint64_t>(c.integer("seed"));
  const auto vals = c.reals("viewpoint");
  Vec6 v = space.bounds.b();
  if (!vals.empty()) {
    if (vals.size() != 6) throw ConfigError("viewpoint needs six comma-separated numbers");
    std::copy(vals.begin(), vals.end(), v.begin());
  }
  std::optional<Viewpoint> vp;
  try {
    vp.emplace(v, space.bounds);
  } catch (const BoundsError& e) {
    throw ConfigError(std::string("viewpoint: ") + e.what());
  }
  const fs::path path = f.output.empty() ? fs::path(f.out_dir) / "render.png" : fs::path(f.output);
  const int jobs = f.jobs;
  return [=] {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_image(render(scene.field, *vp, space.bounds, rc, jobs), path);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewfool: adversarial viewpoint search against image classifiers"};
  app.require_subcommand(1);
  app.footer(config_help() +
             "\nPrecedence: defaults < --config file < VIEWFOOL_<KEY> environment < flags.\n"
             "Exit codes: 0 success, 2 configuration error, 3 runtime error.");
  CommonFlags f;
  auto* attack = app.add_subcommand("attack", "optimize a viewpoint distribution against the classifier");
  auto* bench = app.add_subcommand("bench", "run one experiment of the evaluation suite");
  auto* rend = app.add_subcommand("render", "render one viewpoint to PNG or PPM");
  for (auto* s : {attack, bench, rend}) add_common(s, f);
  attack->add_option("--resume", f.resume, "continue from a checkpoint");
  bench->add_option("--experiment", f.experiment, "experiment (key experiment)");
  rend->add_option("--viewpoint", f.viewpoint, "six comma-separated numbers (key viewpoint)");
  rend->add_option("--output", f.output, "output image (.ppm for PPM, otherwise PNG)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  Job job;
  Config cfg;
  try {
    cfg = resolve_config(f);
    if (f.dry_run) {
      std::cout << cfg.echo();
      return 0;
    }
    if (attack->parsed()) job = plan_attack(cfg, f);
    else if (bench->parsed()) job = plan_bench(cfg, f);
    else job = plan_render(cfg, f);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (!rend->parsed()) {
      fs::create_directories(f.out_dir);
      write_file(fs::path(f.out_dir) / "config.txt", cfg.echo());
    }
    job();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
