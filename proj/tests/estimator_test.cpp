// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "viewfool/estimator.hpp"

namespace viewfool {
namespace {

const ViewpointBounds kUnit({-1, -1, -1, -1, -1, -1}, {1, 1, 1, 1, 1, 1});

using LossFn = std::function<double(const Viewpoint&)>;

EvalBatch make_batch(const DistributionParams& p, const ViewpointBounds& b, std::size_t k, std::uint64_t seed,
                     const LossFn& loss) {
  Rng rng(seed);
  EvalBatch batch;
  for (const auto& s : sample_viewpoints(p, b, k, rng)) batch.push_back({s.epsilon, s.v, loss(s.v)});
  return batch;
}

DistributionParams test_params() {
  DistributionParams p;
  p.mu = {0.3, -0.2, 0.5, -0.6, 0.1, 0.0};
  p.sigma = {0.4, 0.6, 0.3, 0.5, 0.8, 0.45};
  return p;
}

TEST(ScoreGradients, ConstantLossGivesExactZero) {
  const auto p = test_params();
  const auto batch = make_batch(p, kUnit, 37, 1, [](const Viewpoint&) { return 0.7310585786300049; });
  const GradientPair g = score_gradients(batch, p);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_EQ(g.grad_mu[d], 0.0);
    EXPECT_EQ(g.grad_sigma[d], 0.0);
  }
}

TEST(ScoreGradients, NaturalAndPlainMuDifferBySigmaSquared) {
  const auto p = test_params();
  const auto batch = make_batch(p, kUnit, 200, 2, [](const Viewpoint& v) { return v[0] * v[0] + std::sin(3 * v[4]); });
  const GradientPair nat = score_gradients(batch, p, false);
  const GradientPair plain = plain_score_gradients(batch, p, false);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_NEAR(nat.grad_mu[d], p.sigma[d] * p.sigma[d] * plain.grad_mu[d], 1e-13 * (1 + std::abs(nat.grad_mu[d])));
    // F_sigma = 2 I / sigma^2.
    EXPECT_NEAR(nat.grad_sigma[d], 0.5 * p.sigma[d] * p.sigma[d] * plain.grad_sigma[d],
                1e-13 * (1 + std::abs(nat.grad_sigma[d])));
  }
}

TEST(ScoreGradients, BaselineOffIsTheRawEstimator) {
  const auto p = test_params();
  const auto batch = make_batch(p, kUnit, 50, 3, [](const Viewpoint& v) { return 2.0 + v[1]; });
  const GradientPair g = score_gradients(batch, p, false);
  double expect_mu1 = 0.0;
  for (const auto& e : batch) expect_mu1 += e.loss * p.sigma[1] * e.epsilon[1];
  EXPECT_NEAR(g.grad_mu[1], expect_mu1 / 50.0, 1e-14);
}

TEST(ScoreGradients, BaselineMakesConstantShiftsInvisible) {
  const auto p = test_params();
  const LossFn f = [](const Viewpoint& v) { return v[0] - 0.5 * v[2] * v[3]; };
  const auto a = make_batch(p, kUnit, 100, 4, f);
  auto b = a;
  for (auto& e : b) e.loss += 5.0;
  const GradientPair ga = score_gradients(a, p), gb = score_gradients(b, p);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_NEAR(ga.grad_mu[d], gb.grad_mu[d], 1e-12);
    EXPECT_NEAR(ga.grad_sigma[d], gb.grad_sigma[d], 1e-12);
  }
}

TEST(ScoreGradients, InputValidation) {
  const auto p = test_params();
  const auto one = make_batch(p, kUnit, 1, 5, [](const Viewpoint&) { return 1.0; });
  EXPECT_THROW(score_gradients(one, p, true), InvalidArgument);
  EXPECT_NO_THROW(score_gradients(one, p, false));
  EXPECT_THROW(score_gradients(EvalBatch{}, p, false), InvalidArgument);
  auto bad = make_batch(p, kUnit, 4, 5, [](const Viewpoint&) { return 1.0; });
  bad[2].loss = std::nan("");
  EXPECT_THROW(score_gradients(bad, p), InvalidArgument);
}

// Central differences of the smoothed objective J(mu, sigma) = E[L(v)] over
// one shared set of draws (common random numbers), then the closed-form
// Fisher preconditioning sigma^2 and sigma^2 / 2. Returns mean and standard
// error per component.
GradientEstimate fisher_fd_oracle(const LossFn& loss, const DistributionParams& p, const ViewpointBounds& b,
                                  std::size_t k, std::uint64_t seed, double h = 1e-4) {
  Rng rng(seed);
  const auto eps = draw_epsilons(k, rng);
  return detail::reduce(k, [&](std::size_t i) {
    std::array<double, 12> t{};
    auto eval = [&](const DistributionParams& q) {
      Vec6 u;
      for (std::size_t d = 0; d < 6; ++d) u[d] = q.mu[d] + q.sigma[d] * eps[i][d];
      return loss(transform_to_viewpoint(u, b));
    };
    for (std::size_t d = 0; d < 6; ++d) {
      DistributionParams plus = p, minus = p;
      plus.mu[d] += h;
      minus.mu[d] -= h;
      t[d] = p.sigma[d] * p.sigma[d] * (eval(plus) - eval(minus)) / (2 * h);
      plus = minus = p;
      plus.sigma[d] += h;
      minus.sigma[d] -= h;
      t[d + 6] = 0.5 * p.sigma[d] * p.sigma[d] * (eval(plus) - eval(minus)) / (2 * h);
    }
    return t;
  });
}

TEST(ScoreGradients, MatchFiniteDifferencesOfSmoothedQuadratic) {
  const auto p = test_params();
  const Vec6 v0 = {0.2, -0.4, 0.1, 0.5, -0.3, 0.25};
  const LossFn loss = [&](const Viewpoint& v) {
    double s = 0.0;
    for (std::size_t d = 0; d < 6; ++d) s += (v[d] - v0[d]) * (v[d] - v0[d]);
    return s;
  };
  const GradientEstimate score = score_gradient_estimate(make_batch(p, kUnit, 100000, 11, loss), p);
  const GradientEstimate fd = fisher_fd_oracle(loss, p, kUnit, 100000, 12);
  for (std::size_t d = 0; d < 6; ++d) {
    const double se_mu = std::hypot(score.stderr_.grad_mu[d], fd.stderr_.grad_mu[d]);
    const double se_sigma = std::hypot(score.stderr_.grad_sigma[d], fd.stderr_.grad_sigma[d]);
    EXPECT_LE(std::abs(score.mean.grad_mu[d] - fd.mean.grad_mu[d]), 3 * se_mu) << d;
    EXPECT_LE(std::abs(score.mean.grad_sigma[d] - fd.mean.grad_sigma[d]), 3 * se_sigma) << d;
  }
}

TEST(ScoreGradients, MonotoneLossPushesOnlyItsCoordinate) {
  const auto p = test_params();
  const GradientEstimate g =
      score_gradient_estimate(make_batch(p, kUnit, 40000, 13, [](const Viewpoint& v) { return v[0]; }), p);
  EXPECT_GT(g.mean.grad_mu[0], 5 * g.stderr_.grad_mu[0]);
  for (std::size_t d = 1; d < 6; ++d) EXPECT_LE(std::abs(g.mean.grad_mu[d]), 4 * g.stderr_.grad_mu[d]) << d;
}

TEST(ScoreGradients, SmallAndLargeBatchesAgree) {
  const auto p = test_params();
  const LossFn loss = [](const Viewpoint& v) { return std::cos(2 * v[0]) + v[3] * v[3] - v[5]; };
  const GradientEstimate small = score_gradient_estimate(make_batch(p, kUnit, 5000, 14, loss), p);
  const GradientEstimate large = score_gradient_estimate(make_batch(p, kUnit, 20000, 15, loss), p);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_LE(std::abs(small.mean.grad_mu[d] - large.mean.grad_mu[d]),
              3 * std::hypot(small.stderr_.grad_mu[d], large.stderr_.grad_mu[d]));
    EXPECT_LE(std::abs(small.mean.grad_sigma[d] - large.mean.grad_sigma[d]),
              3 * std::hypot(small.stderr_.grad_sigma[d], large.stderr_.grad_sigma[d]));
  }
}

TEST(EntropyGradients, MuGradientVanishesAtZeroMean) {
  DistributionParams p = test_params();
  p.mu.fill(0.0);
  Rng rng(16);
  const GradientEstimate g = entropy_gradient_estimate(p, kUnit, draw_epsilons(100000, rng));
  for (std::size_t d = 0; d < 6; ++d) EXPECT_LE(std::abs(g.mean.grad_mu[d]), 3 * g.stderr_.grad_mu[d]);
}

TEST(EntropyGradients, MatchCentralDifferencesOfEntropy) {
  const auto p = test_params();
  const ViewpointBounds b = paper_full_bounds();
  Rng rng(17);
  const auto eps = draw_epsilons(20000, rng);
  const GradientPair g = entropy_gradients(p, b, eps);
  const double h = 1e-5;
  for (std::size_t d = 0; d < 6; ++d) {
    DistributionParams plus = p, minus = p;
    plus.mu[d] += h;
    minus.mu[d] -= h;
    const double fd_mu = (entropy_from_epsilons(plus, b, eps) - entropy_from_epsilons(minus, b, eps)) / (2 * h);
    plus = minus = p;
    plus.sigma[d] += h;
    minus.sigma[d] -= h;
    const double fd_sigma = (entropy_from_epsilons(plus, b, eps) - entropy_from_epsilons(minus, b, eps)) / (2 * h);
    EXPECT_LE(std::abs(g.grad_mu[d] - fd_mu), 1e-3 * std::abs(fd_mu)) << d;
    EXPECT_LE(std::abs(g.grad_sigma[d] - fd_sigma), 1e-3 * std::abs(fd_sigma)) << d;
  }
}

TEST(EntropyGradients, PredictEntropyChangeToSecondOrder) {
  const auto p = test_params();
  Rng rng(18);
  const auto eps = draw_epsilons(5000, rng);
  const GradientPair g = entropy_gradients(p, kUnit, eps);
  const Vec6 dmu = {0.3, -0.1, 0.2, 0.05, -0.25, 0.1}, dsigma = {0.1, 0.2, -0.05, 0.15, -0.1, 0.05};
  double prev = 0.0;
  for (double s : {1e-2, 5e-3, 2.5e-3}) {
    DistributionParams q = p;
    double predicted = 0.0;
    for (std::size_t d = 0; d < 6; ++d) {
      q.mu[d] += s * dmu[d];
      q.sigma[d] += s * dsigma[d];
      predicted += g.grad_mu[d] * s * dmu[d] + g.grad_sigma[d] * s * dsigma[d];
    }
    const double err = std::abs(entropy_from_epsilons(q, kUnit, eps) - entropy_from_epsilons(p, kUnit, eps) - predicted);
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 3.5);
      EXPECT_LT(prev / err, 4.5);
    }
    prev = err;
  }
}

TEST(EntropyGradients, SmallSigmaPushesSigmaUp) {
  DistributionParams p = test_params();
  p.sigma.fill(kSigmaFloor);
  Rng rng(19);
  const GradientPair g = entropy_gradients(p, kUnit, draw_epsilons(1000, rng));
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_GT(g.grad_sigma[d], 0.0);
    EXPECT_NEAR(g.grad_sigma[d] * kSigmaFloor, 1.0, 1e-2);
  }
}

TEST(EntropyGradients, RejectSigmaBelowFloor) {
  DistributionParams p = test_params();
  p.sigma[4] = 5e-4;
  Rng rng(20);
  EXPECT_THROW(entropy_gradients(p, kUnit, draw_epsilons(10, rng)), InvalidArgument);
  EXPECT_THROW(entropy_gradients(test_params(), kUnit, {}), InvalidArgument);
}

TEST(CombinedGradients, ReducesToItsParts) {
  const auto p = test_params();
  const auto batch = make_batch(p, kUnit, 64, 21, [](const Viewpoint& v) { return v[2] * v[2] - v[0]; });
  EXPECT_EQ(combined_gradients(batch, p, kUnit, 0.0), score_gradients(batch, p));

  auto zero = batch;
  for (auto& e : zero) e.loss = 0.0;
  std::vector<Vec6> eps;
  for (const auto& e : zero) eps.push_back(e.epsilon);
  const GradientPair c = combined_gradients(zero, p, kUnit, 1.0);
  const GradientPair h = entropy_gradients(p, kUnit, eps);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_DOUBLE_EQ(c.grad_mu[d], h.grad_mu[d]);
    EXPECT_DOUBLE_EQ(c.grad_sigma[d], h.grad_sigma[d]);
  }

  const GradientPair mixed = combined_gradients(batch, p, kUnit, 0.25);
  const GradientPair s = score_gradients(batch, p);
  eps.clear();
  for (const auto& e : batch) eps.push_back(e.epsilon);
  const GradientPair hb = entropy_gradients(p, kUnit, eps);
  for (std::size_t d = 0; d < 6; ++d) EXPECT_DOUBLE_EQ(mixed.grad_sigma[d], s.grad_sigma[d] + 0.25 * hb.grad_sigma[d]);
  EXPECT_THROW(combined_gradients(batch, p, kUnit, -0.1), InvalidArgument);
}

}  // namespace
}  // namespace viewfool
