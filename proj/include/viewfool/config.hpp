// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: a flat key = value document checked against a schema.
// Later sources override earlier ones: schema defaults, config file,
// VIEWFOOL_<KEY> environment variables, command-line flags.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/geometry.hpp"

namespace viewfool {

enum class KeyType { integer, real, boolean, text, real_list, choice };

struct KeySpec {
  std::string_view key;
  KeyType type;
  std::string_view default_value;
  std::string_view help;
  std::vector<std::string_view> choices{};
};

inline constexpr std::string_view kEnvPrefix = "VIEWFOOL_";

inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"scene", KeyType::text, "builtin:marker:60",
       "scene file, or builtin:marker:<yaw>, builtin:sphere, builtin:box, builtin:two-tone-cube"},
      {"preset", KeyType::choice, "toy-wedge", "bounds and search-space preset",
       {"toy-wedge", "paper-full", "translation-only", "rotation-only", "2d-transform"}},
      {"bounds", KeyType::choice, "", "viewpoint box; empty takes it from the preset",
       {"", "toy-wedge", "paper-full", "custom"}},
      {"v_min", KeyType::real_list, "", "six lower bounds, used when bounds = custom"},
      {"v_max", KeyType::real_list, "", "six upper bounds, used when bounds = custom"},
      {"search", KeyType::choice, "", "searched components; empty takes them from the preset",
       {"", "combined", "translation", "rotation", "2d"}},
      {"classifier", KeyType::choice, "builtin", "builtin template bank (marker scenes) or external process",
       {"builtin", "external"}},
      {"classifier_input", KeyType::integer, "16", "classifier input width and height in pixels"},
      {"logit_scale", KeyType::real, "20", "builtin classifier logit scale"},
      {"oracle_command", KeyType::text, "", "shell command of the external classifier"},
      {"oracle_classes", KeyType::integer, "2", "number of logits the external classifier returns"},
      {"oracle_timeout_ms", KeyType::integer, "10000", "per-query timeout of the external classifier"},
      {"width", KeyType::integer, "32", "render width in pixels"},
      {"height", KeyType::integer, "32", "render height in pixels"},
      {"fov_deg", KeyType::real, "40", "vertical field of view in degrees"},
      {"samples_per_ray", KeyType::integer, "32", "quadrature points per ray"},
      {"stratified", KeyType::boolean, "false", "jitter quadrature points within strata"},
      {"t_near", KeyType::real, "2", "near ray bound"},
      {"t_far", KeyType::real, "6.5", "far ray bound"},
      {"background", KeyType::real_list, "1,1,1", "background RGB"},
      {"lambda", KeyType::real, "0.01", "entropy weight"},
      {"k", KeyType::integer, "50", "viewpoints sampled per iteration"},
      {"iterations", KeyType::integer, "100", "optimizer iterations"},
      {"lr", KeyType::real, "0.01", "Adam learning rate"},
      {"beta1", KeyType::real, "0.9", "Adam first-moment decay"},
      {"beta2", KeyType::real, "0.999", "Adam second-moment decay"},
      {"adam_eps", KeyType::real, "1e-8", "Adam epsilon"},
      {"sigma_floor", KeyType::real, "0.001", "lower clamp on sigma"},
      {"mu_init", KeyType::real, "0", "initial mu for every component"},
      {"sigma_init", KeyType::real, "0.5", "initial sigma for every component"},
      {"baseline", KeyType::boolean, "true", "subtract the batch-mean loss"},
      {"seed", KeyType::integer, "0", "master seed"},
      {"checkpoint_every", KeyType::integer, "0", "also checkpoint every n iterations (0: only at the end)"},
      {"eval_samples", KeyType::integer, "100", "posterior samples behind rate_dist and parameter std"},
      {"proxy_trials", KeyType::integer, "10", "jittered re-renders behind the perturbed-render proxy"},
      {"viewpoint", KeyType::real_list, "", "render viewpoint; empty means the bounds midpoint"},
      {"experiment", KeyType::choice, "random-vs-viewfool", "bench experiment",
       {"random-vs-viewfool", "lambda-sweep", "fluctuation", "transfer", "emit-dataset", "table1"}},
      {"lambdas", KeyType::real_list, "0,0.01,0.1,1", "lambda values for lambda-sweep and fluctuation"},
      {"seeds", KeyType::integer, "3", "number of seeds per cell, counting up from seed"},
      {"random_budget", KeyType::integer, "0", "random-search renders (0: k * iterations)"},
      {"fluct_samples", KeyType::integer, "20", "perturbed viewpoints per fluctuation point"},
      {"fluct_max_percent", KeyType::integer, "10", "fluctuation test runs r = 1..this percent"},
      {"suite_size", KeyType::integer, "4", "toy scenes used by transfer and emit-dataset"},
      {"dataset_per_scene", KeyType::integer, "100", "images per scene for emit-dataset"},
  };
  return schema;
}

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& s : config_schema())
    if (s.key == key) return &s;
  return nullptr;
}

inline std::string_view to_string(KeyType t) {
  switch (t) {
    case KeyType::integer: return "int";
    case KeyType::real: return "real";
    case KeyType::boolean: return "bool";
    case KeyType::text: return "string";
    case KeyType::real_list: return "list";
    case KeyType::choice: return "choice";
  }
  return "?";
}

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_int(std::string_view s, long long& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

inline bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

inline std::vector<double> parse_real_list(std::string_view s, std::string_view key) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::stringstream ss{std::string(s)};
  while (std::getline(ss, item, ',')) {
    double v;
    if (!parse_real(trim(item), v))
      throw ConfigError("key '" + std::string(key) + "': '" + trim(item) + "' is not a number");
    out.push_back(v);
  }
  return out;
}

inline void check_value(const KeySpec& spec, const std::string& value) {
  const std::string key(spec.key);
  long long i;
  double r;
  switch (spec.type) {
    case KeyType::integer:
      if (!parse_int(value, i)) throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
      break;
    case KeyType::real:
      if (!parse_real(value, r)) throw ConfigError("key '" + key + "': '" + value + "' is not a finite number");
      break;
    case KeyType::boolean:
      if (value != "true" && value != "false") throw ConfigError("key '" + key + "': expected true or false");
      break;
    case KeyType::real_list:
      parse_real_list(value, key);
      break;
    case KeyType::choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string msg = "key '" + key + "': '" + value + "' is not one of";
        for (auto c : spec.choices) msg += " '" + std::string(c) + "'";
        throw ConfigError(msg);
      }
      break;
    case KeyType::text:
      break;
  }
}

}  // namespace detail

/// Resolved configuration. Every schema key always has a value.
class Config {
 public:
  Config() {
    for (const auto& s : config_schema()) {
      values_[std::string(s.key)] = std::string(s.default_value);
      origin_[std::string(s.key)] = "default";
    }
  }

  void set(std::string_view key, std::string_view value, std::string_view origin) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown config key '" + std::string(key) + "' (" + std::string(origin) + ")");
    std::string v = detail::trim(value);
    detail::check_value(*spec, v);
    values_[std::string(key)] = v;
    origin_[std::string(key)] = std::string(origin);
  }

  /// Applies `key = value` lines. '#' starts a comment. Unknown keys are
  /// collected and reported together.
  void merge_text(std::string_view text, std::string_view origin) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<std::string> unknown;
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
      std::string key = detail::trim(std::string_view(t).substr(0, eq));
      if (!find_key(key)) {
        unknown.push_back(key);
        continue;
      }
      entries.emplace_back(std::move(key), t.substr(eq + 1));
    }
    if (!unknown.empty()) {
      std::string msg = "unknown config keys in " + std::string(origin) + ":";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
    for (const auto& [k, v] : entries) set(k, v, origin);
  }

  void merge_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    merge_text(ss.str(), path);
  }

  /// Applies VIEWFOOL_<KEY> variables from a NAME=VALUE list. A variable
  /// with the prefix that names no key is an error.
  void merge_env(const std::vector<std::string>& env) {
    std::vector<std::string> unknown;
    for (const auto& entry : env) {
      if (entry.rfind(kEnvPrefix, 0) != 0) continue;
      const auto eq = entry.find('=');
      if (eq == std::string::npos) continue;
      std::string key = entry.substr(kEnvPrefix.size(), eq - kEnvPrefix.size());
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      if (!find_key(key)) {
        unknown.push_back(entry.substr(0, eq));
        continue;
      }
      set(key, entry.substr(eq + 1), "env " + entry.substr(0, eq));
    }
    if (!unknown.empty()) {
      std::string msg = "unknown config environment variables:";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
  }

  const std::string& text(std::string_view key) const { return lookup(key); }
  const std::string& origin(std::string_view key) const { return origin_.at(std::string(key)); }

  long long integer(std::string_view key) const {
    long long v = 0;
    detail::parse_int(lookup(key), v);
    return v;
  }
  long long integer_at_least(std::string_view key, long long lo) const {
    const long long v = integer(key);
    if (v < lo) throw ConfigError("key '" + std::string(key) + "' must be at least " + std::to_string(lo));
    return v;
  }
  double real(std::string_view key) const {
    double v = 0.0;
    detail::parse_real(lookup(key), v);
    return v;
  }
  bool boolean(std::string_view key) const { return lookup(key) == "true"; }
  std::vector<double> reals(std::string_view key) const { return detail::parse_real_list(lookup(key), key); }

  /// The resolved document in schema order; feeding it back reproduces this
  /// configuration.
  std::string echo() const {
    std::string out;
    for (const auto& s : config_schema()) out += std::string(s.key) + " = " + values_.at(std::string(s.key)) + "\n";
    return out;
  }

 private:
  const std::string& lookup(std::string_view key) const {
    auto it = values_.find(std::string(key));
    if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
};

/// One line per key: name, type, default, description.
inline std::string config_help() {
  std::ostringstream os;
  os << "Config keys (file: key = value; environment: " << kEnvPrefix << "<KEY>):\n";
  for (const auto& s : config_schema()) {
    os << "  " << s.key << " (" << to_string(s.type) << ", default '" << s.default_value << "')  " << s.help;
    if (s.type == KeyType::choice) {
      os << " [";
      bool first = true;
      for (auto c : s.choices) {
        if (c.empty()) continue;
        os << (first ? "" : "|") << c;
        first = false;
      }
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

struct PresetSpec {
  std::string_view name;
  std::string_view bounds;
  std::string_view search;
};

inline PresetSpec preset_spec(std::string_view name) {
  static constexpr PresetSpec kPresets[] = {{"toy-wedge", "toy-wedge", "combined"},
                                            {"paper-full", "paper-full", "combined"},
                                            {"translation-only", "paper-full", "translation"},
                                            {"rotation-only", "paper-full", "rotation"},
                                            {"2d-transform", "paper-full", "2d"}};
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

inline ViewpointBounds bounds_from_config(const Config& c) {
  std::string b = c.text("bounds");
  if (b.empty()) b = std::string(preset_spec(c.text("preset")).bounds);
  if (b == "toy-wedge") return toy_wedge_bounds();
  if (b == "paper-full") return paper_full_bounds();
  const auto lo = c.reals("v_min");
  const auto hi = c.reals("v_max");
  if (lo.size() != 6 || hi.size() != 6) throw ConfigError("bounds = custom needs six values in v_min and v_max");
  Vec6 a{}, z{};
  std::copy(lo.begin(), lo.end(), a.begin());
  std::copy(hi.begin(), hi.end(), z.begin());
  try {
    return ViewpointBounds(a, z);
  } catch (const Error& e) {
    throw ConfigError(std::string("custom bounds: ") + e.what());
  }
}

inline std::string search_mode_name(const Config& c) {
  const std::string s = c.text("search");
  return s.empty() ? std::string(preset_spec(c.text("preset")).search) : s;
}

}  // namespace viewfool
