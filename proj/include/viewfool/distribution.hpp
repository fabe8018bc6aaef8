// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/geometry.hpp"
#include "viewfool/rng.hpp"

namespace viewfool {

inline constexpr double kSigmaFloor = 1e-3;

/// Mean and standard deviation of the diagonal Gaussian over u; the
/// viewpoint is v = a * tanh(u) + b.
struct DistributionParams {
  Vec6 mu{};
  Vec6 sigma{};

  static DistributionParams initial(double mu0 = 0.0, double sigma0 = 0.5) {
    DistributionParams p;
    p.mu.fill(mu0);
    p.sigma.fill(sigma0);
    return p;
  }

  void validate(double sigma_floor = kSigmaFloor) const {
    for (std::size_t d = 0; d < 6; ++d) {
      if (!std::isfinite(mu[d]) || !std::isfinite(sigma[d]))
        throw InvalidArgument("distribution parameters must be finite");
      if (sigma[d] < sigma_floor) throw InvalidArgument("sigma below floor");
    }
  }

  friend bool operator==(const DistributionParams&, const DistributionParams&) = default;
};

/// Which dimensions are searched. Frozen dimensions are pinned to `fixed`
/// and excluded from gradients and entropy.
struct SearchSpace {
  ViewpointBounds bounds;
  std::array<bool, 6> active{true, true, true, true, true, true};
  Vec6 fixed{};

  explicit SearchSpace(ViewpointBounds b) : bounds(std::move(b)) {}
  SearchSpace(ViewpointBounds b, std::array<bool, 6> act, Vec6 fix)
      : bounds(std::move(b)), active(act), fixed(fix) {
    for (std::size_t d = 0; d < 6; ++d)
      if (!active[d] && !(fixed[d] >= bounds.v_min()[d] && fixed[d] <= bounds.v_max()[d]))
        throw BoundsError(std::string("fixed value for ") + kViewDimNames[d] + " outside bounds");
  }

  Viewpoint pin(const Viewpoint& v) const {
    Vec6 out = v.values();
    for (std::size_t d = 0; d < 6; ++d)
      if (!active[d]) out[d] = fixed[d];
    return Viewpoint(out, bounds);
  }
};

/// log(1 - tanh(x)^2) = 2 (log 2 - |x| - log(1 + exp(-2|x|))), finite for all x.
inline double log1m_tanh_sq(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::numbers::ln2 - ax - std::log1p(std::exp(-2.0 * ax)));
}

/// v = a * tanh(u) + b, nudged one ulp inward if tanh saturates so the
/// result stays strictly inside the open box.
inline Viewpoint transform_to_viewpoint(const Vec6& u, const ViewpointBounds& bounds) {
  Vec6 v{};
  for (std::size_t d = 0; d < 6; ++d) {
    if (!std::isfinite(u[d])) throw InvalidArgument("latent coordinate must be finite");
    const double lo = bounds.v_min()[d], hi = bounds.v_max()[d];
    double x = bounds.a()[d] * std::tanh(u[d]) + bounds.b()[d];
    if (x >= hi) x = std::nextafter(hi, lo);
    if (x <= lo) x = std::nextafter(lo, hi);
    v[d] = x;
  }
  return Viewpoint(v, bounds);
}

inline Vec6 inverse_transform(const Viewpoint& v, const ViewpointBounds& bounds) {
  Vec6 u{};
  for (std::size_t d = 0; d < 6; ++d) u[d] = std::atanh((v[d] - bounds.b()[d]) / bounds.a()[d]);
  return u;
}

inline std::vector<Vec6> draw_epsilons(std::size_t k, Rng& rng) {
  std::vector<Vec6> eps(k);
  for (auto& e : eps)
    for (double& x : e) x = rng.normal();
  return eps;
}

struct ViewSample {
  Vec6 epsilon;
  Viewpoint v;
};

/// k reparameterized draws v = transform(mu + sigma * eps), eps ~ N(0, I).
inline std::vector<ViewSample> sample_viewpoints(const DistributionParams& params, const ViewpointBounds& bounds,
                                                 std::size_t k, Rng& rng) {
  if (k < 1) throw InvalidArgument("need at least one sample");
  std::vector<ViewSample> out;
  out.reserve(k);
  for (const Vec6& e : draw_epsilons(k, rng)) {
    Vec6 u{};
    for (std::size_t d = 0; d < 6; ++d) u[d] = params.mu[d] + params.sigma[d] * e[d];
    out.push_back({e, transform_to_viewpoint(u, bounds)});
  }
  return out;
}

/// One-dimensional log density of v = a tanh(u) + b with u ~ N(mu, sigma^2).
inline double log_density_1d(double v, double mu, double sigma, double a, double b) {
  const double z = (v - b) / a;
  if (!(z > -1.0 && z < 1.0)) throw DomainError("viewpoint on or outside the bounds box");
  const double u = std::atanh(z);
  const double e = (u - mu) / sigma;
  return -0.5 * e * e - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma) - std::log(a) -
         log1m_tanh_sq(u);
}

inline double log_density(const Viewpoint& v, const DistributionParams& params, const ViewpointBounds& bounds) {
  double total = 0.0;
  for (std::size_t d = 0; d < 6; ++d)
    total += log_density_1d(v[d], params.mu[d], params.sigma[d], bounds.a()[d], bounds.b()[d]);
  return total;
}

/// Per-sample negative log density summed over the dimensions in `mask`:
///   eps^2/2 + log(2 pi)/2 + log sigma + log(1 - tanh^2(mu + sigma eps)) + log a
inline double neg_log_density_from_epsilon(const Vec6& eps, const DistributionParams& params,
                                           const ViewpointBounds& bounds,
                                           const std::array<bool, 6>& mask = {true, true, true, true, true, true}) {
  double h = 0.0;
  for (std::size_t d = 0; d < 6; ++d) {
    if (!mask[d]) continue;
    const double u = params.mu[d] + params.sigma[d] * eps[d];
    h += 0.5 * eps[d] * eps[d] + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(params.sigma[d]) +
         log1m_tanh_sq(u) + std::log(bounds.a()[d]);
  }
  return h;
}

/// Monte Carlo entropy over a fixed set of standard-normal draws.
inline double entropy_from_epsilons(const DistributionParams& params, const ViewpointBounds& bounds,
                                    const std::vector<Vec6>& eps,
                                    const std::array<bool, 6>& mask = {true, true, true, true, true, true}) {
  if (eps.empty()) throw InvalidArgument("need at least one sample");
  double sum = 0.0;
  for (const Vec6& e : eps) sum += neg_log_density_from_epsilon(e, params, bounds, mask);
  return sum / static_cast<double>(eps.size());
}

/// Monte Carlo entropy estimate from k fresh draws. Consumes the generator
/// exactly as sample_viewpoints does, so the two can share draws by seed.
inline double entropy(const DistributionParams& params, const ViewpointBounds& bounds, std::size_t k, Rng& rng) {
  if (k < 1) throw InvalidArgument("need at least one sample");
  return entropy_from_epsilons(params, bounds, draw_epsilons(k, rng));
}

/// Entropy of the uniform distribution on the bounds box, sum_d log(2 a_d).
inline double uniform_entropy(const ViewpointBounds& bounds) {
  double h = 0.0;
  for (double a : bounds.a()) h += std::log(2.0 * a);
  return h;
}

}  // namespace viewfool
