// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "viewfool/distribution.hpp"
#include "viewfool/error.hpp"

namespace viewfool {

struct GradientPair {
  Vec6 grad_mu{};
  Vec6 grad_sigma{};

  friend bool operator==(const GradientPair&, const GradientPair&) = default;
};

/// One evaluated sample: the auxiliary draw, its viewpoint and the loss there.
struct EvalEntry {
  Vec6 epsilon;
  Viewpoint v;
  double loss;
};

using EvalBatch = std::vector<EvalEntry>;

/// Mean gradient plus per-component standard error of that mean.
struct GradientEstimate {
  GradientPair mean;
  GradientPair stderr_;
};

namespace detail {

// Returns L_i - Lbar for every entry. The mean is taken over offsets from
// the first loss so a constant batch centres to exactly zero.
inline std::vector<double> centered_losses(const EvalBatch& batch, bool baseline_on) {
  if (batch.empty()) throw InvalidArgument("empty evaluation batch");
  if (baseline_on && batch.size() < 2) throw InvalidArgument("baseline subtraction needs k >= 2");
  for (const auto& e : batch)
    if (!std::isfinite(e.loss)) throw InvalidArgument("non-finite loss in batch");
  std::vector<double> out(batch.size());
  if (!baseline_on) {
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = batch[i].loss;
    return out;
  }
  const double pivot = batch.front().loss;
  double offset = 0.0;
  for (const auto& e : batch) offset += e.loss - pivot;
  offset /= static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out[i] = (batch[i].loss - pivot) - offset;
  return out;
}

// Accumulates mean and standard error of per-sample terms f(i) for all
// twelve gradient components.
template <typename Term>
GradientEstimate reduce(std::size_t k, Term term) {
  std::array<double, 12> sum{}, sum_sq{};
  for (std::size_t i = 0; i < k; ++i) {
    const std::array<double, 12> t = term(i);
    for (std::size_t c = 0; c < 12; ++c) {
      sum[c] += t[c];
      sum_sq[c] += t[c] * t[c];
    }
  }
  GradientEstimate out;
  const double n = static_cast<double>(k);
  for (std::size_t c = 0; c < 12; ++c) {
    const double mean = sum[c] / n;
    const double var = k > 1 ? std::max(0.0, (sum_sq[c] - n * mean * mean) / (n - 1.0)) : 0.0;
    const double se = std::sqrt(var / n);
    if (c < 6) {
      out.mean.grad_mu[c] = mean;
      out.stderr_.grad_mu[c] = se;
    } else {
      out.mean.grad_sigma[c - 6] = mean;
      out.stderr_.grad_sigma[c - 6] = se;
    }
  }
  return out;
}

}  // namespace detail

/// Natural-gradient search estimates with the Fisher blocks F_mu = I/sigma^2
/// and F_sigma = 2I/sigma^2 inverted in closed form:
///   grad_mu    = mean_i (L_i - Lbar) * sigma * eps_i
///   grad_sigma = mean_i (L_i - Lbar) * sigma * (eps_i^2 - 1) / 2
/// Lbar is the batch mean when `baseline_on`, else 0.
inline GradientEstimate score_gradient_estimate(const EvalBatch& batch, const DistributionParams& params,
                                                bool baseline_on = true) {
  const std::vector<double> centered_loss = detail::centered_losses(batch, baseline_on);
  return detail::reduce(batch.size(), [&](std::size_t i) {
    std::array<double, 12> t{};
    const double centered = centered_loss[i];
    for (std::size_t d = 0; d < 6; ++d) {
      const double e = batch[i].epsilon[d];
      t[d] = centered * params.sigma[d] * e;
      t[d + 6] = centered * params.sigma[d] * (e * e - 1.0) / 2.0;
    }
    return t;
  });
}

inline GradientPair score_gradients(const EvalBatch& batch, const DistributionParams& params,
                                    bool baseline_on = true) {
  return score_gradient_estimate(batch, params, baseline_on).mean;
}

/// Plain (unpreconditioned) search gradients using the Gaussian score
/// eps/sigma and (eps^2 - 1)/sigma.
inline GradientPair plain_score_gradients(const EvalBatch& batch, const DistributionParams& params,
                                          bool baseline_on = true) {
  const std::vector<double> centered_loss = detail::centered_losses(batch, baseline_on);
  return detail::reduce(batch.size(), [&](std::size_t i) {
    std::array<double, 12> t{};
    const double centered = centered_loss[i];
    for (std::size_t d = 0; d < 6; ++d) {
      const double e = batch[i].epsilon[d];
      t[d] = centered * e / params.sigma[d];
      t[d + 6] = centered * (e * e - 1.0) / params.sigma[d];
    }
    return t;
  }).mean;
}

/// Reparameterized entropy gradients averaged over `samples`:
///   dH/dmu    = -2 tanh(mu + sigma eps)
///   dH/dsigma = (1 - 2 tanh(mu + sigma eps) sigma eps) / sigma
inline GradientEstimate entropy_gradient_estimate(const DistributionParams& params, const ViewpointBounds& /*bounds*/,
                                                  const std::vector<Vec6>& samples, double sigma_floor = kSigmaFloor) {
  if (samples.empty()) throw InvalidArgument("need at least one sample");
  for (double s : params.sigma)
    if (!(s >= sigma_floor)) throw InvalidArgument("sigma below floor");
  return detail::reduce(samples.size(), [&](std::size_t i) {
    std::array<double, 12> t{};
    for (std::size_t d = 0; d < 6; ++d) {
      const double se = params.sigma[d] * samples[i][d];
      const double th = std::tanh(params.mu[d] + se);
      t[d] = -2.0 * th;
      t[d + 6] = (1.0 - 2.0 * th * se) / params.sigma[d];
    }
    return t;
  });
}

inline GradientPair entropy_gradients(const DistributionParams& params, const ViewpointBounds& bounds,
                                      const std::vector<Vec6>& samples, double sigma_floor = kSigmaFloor) {
  return entropy_gradient_estimate(params, bounds, samples, sigma_floor).mean;
}

/// Ascent direction for E[L] + lambda * H on one shared batch of draws. Only
/// the loss term is Fisher-preconditioned.
inline GradientPair combined_gradients(const EvalBatch& batch, const DistributionParams& params,
                                       const ViewpointBounds& bounds, double lambda, bool baseline_on = true,
                                       double sigma_floor = kSigmaFloor) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  GradientPair g = score_gradients(batch, params, baseline_on);
  if (lambda == 0.0) return g;
  std::vector<Vec6> eps;
  eps.reserve(batch.size());
  for (const auto& e : batch) eps.push_back(e.epsilon);
  const GradientPair h = entropy_gradients(params, bounds, eps, sigma_floor);
  for (std::size_t d = 0; d < 6; ++d) {
    g.grad_mu[d] += lambda * h.grad_mu[d];
    g.grad_sigma[d] += lambda * h.grad_sigma[d];
  }
  return g;
}

}  // namespace viewfool
