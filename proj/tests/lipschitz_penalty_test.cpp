// Copyright 2026 The LipGAN Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lipgan/lipschitz_penalty.hpp"
#include "lipgan/mlp.hpp"

namespace lipgan::penalty {
namespace {

Tensor random_batch(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Tensor t(n, d);
  for (double& v : t.values()) v = n01(rng);
  return t;
}

nn::Parameters random_critic(const nn::MlpConfig& cfg, std::uint64_t seed) {
  nn::Parameters p = nn::init_mlp(cfg, seed);
  std::mt19937_64 rng(seed + 101);
  std::normal_distribution<double> n01;
  for (std::size_t i = 1; i < p.size(); i += 2) {
    for (double& v : p[i].values()) v = 0.5 * n01(rng);
  }
  return p;
}

TEST(SampleBlend, ForcedZeroReturnsFakeEndpoint) {
  Tensor real = Tensor::from_rows({{0.3, -1.7}, {5.0, 2.25}});
  Tensor fake = Tensor::from_rows({{9.1, 0.1}, {-3.3, 7.0}});
  std::vector<double> t{0.0, 0.0};
  EXPECT_EQ(sample_blend(real, fake, t), fake);
}

TEST(SampleBlend, Midpoint) {
  Tensor real = Tensor::from_rows({{0.0, 0.0}});
  Tensor fake = Tensor::from_rows({{2.0, 0.0}});
  std::vector<double> t{0.5};
  EXPECT_EQ(sample_blend(real, fake, t), Tensor::from_rows({{1.0, 0.0}}));
}

TEST(SampleBlend, SeededPointsLieOnSegments) {
  std::mt19937_64 rng(3);
  Tensor real = random_batch(64, 3, rng);
  Tensor fake = random_batch(64, 3, rng);
  Tensor p = sample_blend(real, fake, rng);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double t = (p(i, 0) - fake(i, 0)) / (real(i, 0) - fake(i, 0));
    EXPECT_GE(t, -1e-12);
    EXPECT_LE(t, 1.0 + 1e-12);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(p(i, k), t * real(i, k) + (1.0 - t) * fake(i, k), 1e-12);
    }
  }
}

TEST(SampleBlend, RejectsMismatchedBatches) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_blend(Tensor(2, 2), Tensor(2, 3), rng), ContractError);
  EXPECT_THROW(sample_blend(Tensor(2, 2), Tensor(3, 2), rng), ContractError);
}

TEST(GradNorms, LinearFields) {
  std::mt19937_64 rng(5);
  Tensor pts = random_batch(10, 2, rng);
  for (double n : grad_norms(linear_field({3.0, 0.0}), pts)) EXPECT_DOUBLE_EQ(n, 3.0);
  for (double n : grad_norms(linear_field({1.0, -2.0}, 0.7), pts)) {
    EXPECT_DOUBLE_EQ(n, std::sqrt(5.0));
  }
}

TEST(GradNorms, MlpMatchesFiniteDifferences) {
  nn::MlpConfig cfg{.input_dim = 2, .hidden_width = 16, .depth = 2,
                    .activation = nn::Activation::kSelu};
  Field f = nn::as_field(cfg, random_critic(cfg, 8));
  std::mt19937_64 rng(9);
  Tensor pts = random_batch(20, 2, rng);
  std::vector<double> norms = grad_norms(f, pts);
  const double h = 1e-6;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      Tensor plus(1, 2), minus(1, 2);
      for (std::size_t c = 0; c < 2; ++c) plus[c] = minus[c] = pts(i, c);
      plus[k] += h;
      minus[k] -= h;
      double d = (sample_field(f, plus).values[0] - sample_field(f, minus).values[0]) / (2 * h);
      sq += d * d;
    }
    EXPECT_NEAR(norms[i], std::sqrt(sq), 1e-4 * std::max(1.0, norms[i]));
  }
}

TEST(Penalties, MaxGpExamples) {
  EXPECT_NEAR(penalty_maxgp(std::vector{1.0, 2.0, 3.0}, 0.1), 0.9, 1e-15);
  EXPECT_EQ(penalty_maxgp(std::vector{2.0}, 1.0), 4.0);
  EXPECT_THROW(penalty_maxgp(std::vector<double>{}, 1.0), ContractError);
}

TEST(Penalties, MaxGpUsesTrackedMaxima) {
  SMaxList smax(4);
  smax.update(Tensor::from_rows({{0.0, 1.0}}), std::vector{2.5});
  std::vector<double> norms{1.0, 2.0};
  for (const auto& e : smax.entries()) norms.push_back(e.norm);
  const double lambda = 0.3;
  EXPECT_DOUBLE_EQ(penalty_maxgp(norms, lambda), lambda * 6.25);
}

TEST(Penalties, GpExamples) {
  EXPECT_EQ(penalty_gp(std::vector{1.0, 1.0}, 1.0, 1.0), 0.0);
  EXPECT_EQ(penalty_gp(std::vector{0.0, 2.0}, 1.0, 1.0), 1.0);
  EXPECT_THROW(penalty_gp(std::vector<double>{}, 1.0, 1.0), ContractError);
}

TEST(Penalties, LpExamples) {
  EXPECT_EQ(penalty_lp(std::vector{0.5, 0.9}, 1.0, 1.0), 0.0);
  EXPECT_EQ(penalty_lp(std::vector{2.0}, 1.0, 2.0), 2.0);
  EXPECT_THROW(penalty_lp(std::vector<double>{}, 1.0, 1.0), ContractError);
}

TEST(Penalties, RandomNormsMatchArithmetic) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> n(7);
    for (double& v : n) v = u(rng);
    double gp = 0, lp = 0;
    for (double v : n) {
      gp += (v - 1.2) * (v - 1.2);
      if (v > 1.2) lp += (v - 1.2) * (v - 1.2);
    }
    EXPECT_NEAR(penalty_gp(n, 1.2, 0.5), 0.5 * gp / 7.0, 1e-14);
    EXPECT_NEAR(penalty_lp(n, 1.2, 0.5), 0.5 * lp / 7.0, 1e-14);
  }
}

TEST(Penalties, GraphFormsMatchNumericForms) {
  std::vector<double> n{0.4, 1.9, 1.1, 2.7};
  ad::Graph g;
  ad::Var v = g.input("norms");
  g.bind(v, Tensor::column(n));
  for (PenaltyKind k : {PenaltyKind::kGp, PenaltyKind::kLp, PenaltyKind::kMaxGp}) {
    PenaltySpec spec{.kind = k, .lambda = 0.7, .k0 = 1.0};
    EXPECT_NEAR(g.eval(apply_penalty(spec, v)).item(), apply_penalty(spec, n), 1e-15);
  }
}

TEST(PenaltySpec, Validation) {
  EXPECT_THROW((PenaltySpec{.lambda = -1.0}).validate(), ConfigError);
  EXPECT_THROW((PenaltySpec{.k0 = -0.5}).validate(), ConfigError);
  EXPECT_THROW((PenaltySpec{.kind = PenaltyKind::kGp, .smax_capacity = 3}).validate(),
               ConfigError);
  EXPECT_NO_THROW((PenaltySpec{.lambda = 10.0, .smax_capacity = 3}).validate());
  EXPECT_EQ(parse_penalty_kind("maxgp"), PenaltyKind::kMaxGp);
  EXPECT_THROW(parse_penalty_kind("sn"), ConfigError);
}

TEST(SMax, TopTwoByNorm) {
  SMaxList s(2);
  std::vector<SMaxList::Entry> first{{{1.0}, 3.0}};
  s.update(first);
  std::vector<SMaxList::Entry> next{{{2.0}, 5.0}, {{3.0}, 1.0}};
  s.update(next);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.entries()[0].point, std::vector{2.0});
  EXPECT_EQ(s.entries()[0].norm, 5.0);
  EXPECT_EQ(s.entries()[1].point, std::vector{1.0});
}

TEST(SMax, EmptyListTakesCandidate) {
  SMaxList s(3);
  std::vector<SMaxList::Entry> c{{{0.5, 0.5}, 0.1}};
  s.update(c);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.entries()[0].norm, 0.1);
  EXPECT_EQ(s.points(2), Tensor::from_rows({{0.5, 0.5}}));
}

TEST(SMax, TiesKeepEarlierEntries) {
  SMaxList s(1);
  std::vector<SMaxList::Entry> a{{{1.0}, 2.0}};
  std::vector<SMaxList::Entry> b{{{9.0}, 2.0}};
  s.update(a);
  s.update(b);
  EXPECT_EQ(s.entries()[0].point, std::vector{1.0});
}

TEST(SMax, ZeroCapacityStaysEmpty) {
  SMaxList s(0);
  std::vector<SMaxList::Entry> c{{{1.0}, 4.0}};
  s.update(c);
  EXPECT_TRUE(s.empty());
}

TEST(SMax, StreamMatchesSortOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  SMaxList s(5);
  std::vector<double> seen;
  for (int batch = 0; batch < 40; ++batch) {
    std::vector<SMaxList::Entry> c;
    for (int i = 0; i < 8; ++i) {
      double n = u(rng);
      seen.push_back(n);
      c.push_back({{n}, n});
    }
    s.update(c);
    std::vector<double> sorted = seen;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    sorted.resize(std::min<std::size_t>(5, sorted.size()));
    ASSERT_EQ(s.size(), sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(s.entries()[i].norm, sorted[i]);
  }
}

TEST(EstimateK, LinearAndConstantFields) {
  std::mt19937_64 rng(2);
  Tensor r = random_batch(30, 2, rng), f = random_batch(30, 2, rng);
  EXPECT_DOUBLE_EQ(estimate_k(linear_field({0.6, -0.8}), r, f, 50, rng), 1.0);
  Field constant = [](ad::Var x) { return ad::zeros_like(ad::sum_cols(x)) + 2.0; };
  EXPECT_EQ(estimate_k(constant, r, f, 50, rng), 0.0);
  EXPECT_THROW(estimate_k(constant, r, f, 0, rng), ContractError);
}

TEST(EstimateK, CloseToDenserSampling) {
  nn::MlpConfig cfg{.input_dim = 2, .hidden_width = 16, .depth = 2,
                    .activation = nn::Activation::kSelu};
  Field f = nn::as_field(cfg, random_critic(cfg, 4));
  std::mt19937_64 rng(6);
  Tensor r = random_batch(8, 2, rng), fk = random_batch(8, 2, rng);
  double coarse = estimate_k(f, r, fk, 1000, rng);
  double dense = estimate_k(f, r, fk, 100000, rng);
  EXPECT_LE(coarse, dense * (1.0 + 1e-12));
  EXPECT_GE(coarse, 0.95 * dense);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(Properties, PenaltiesNonNegativeAndLpBelowGp) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> n(5);
    for (double& v : n) v = u(rng);
    double k0 = u(rng) / 2.0;
    EXPECT_GE(penalty_maxgp(n, 1.0), 0.0);
    EXPECT_GE(penalty_lp(n, k0, 1.0), 0.0);
    EXPECT_LE(penalty_lp(n, k0, 1.0), penalty_gp(n, k0, 1.0));
    for (double& v : n) v = k0 + u(rng);
    EXPECT_DOUBLE_EQ(penalty_lp(n, k0, 1.0), penalty_gp(n, k0, 1.0));
  }
  EXPECT_EQ(penalty_maxgp(std::vector{0.0, 0.0}, 5.0), 0.0);
}

TEST(Properties, PositiveHomogeneityOnLinearCritics) {
  std::mt19937_64 rng(10);
  Tensor pts = random_batch(12, 3, rng);
  std::vector<double> w{0.3, -1.1, 0.8};
  std::vector<double> base = grad_norms(linear_field(w), pts);
  for (double c : {0.0, 0.5, 3.0}) {
    std::vector<double> wc;
    for (double v : w) wc.push_back(c * v);
    std::vector<double> scaled = grad_norms(linear_field(wc), pts);
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(scaled[i], c * base[i], 1e-12);
    EXPECT_NEAR(penalty_maxgp(scaled, 2.0), c * c * penalty_maxgp(base, 2.0), 1e-12);
  }
}

TEST(Properties, MaxGpGradientFlowsOnlyThroughArgmaxSample) {
  nn::MlpConfig cfg{.input_dim = 2, .hidden_width = 8, .depth = 1,
                    .activation = nn::Activation::kSelu};
  nn::Parameters values = random_critic(cfg, 15);
  Tensor two = Tensor::from_rows({{0.4, -0.2}, {-1.3, 0.9}});

  auto penalty_grad = [&](const Tensor& pts) {
    ad::Graph g;
    ad::Var x = g.input("x");
    std::vector<ad::Var> theta = nn::parameter_inputs(g, cfg, "");
    nn::bind_parameters(g, theta, values);
    g.bind(x, pts);
    Field f = [&](ad::Var in) { return nn::mlp_forward(cfg, theta, in); };
    ad::Var p = penalty_maxgp(grad_norms(f, x), 1.0);
    return g.gradient(p, theta);
  };

  std::vector<double> norms = grad_norms(nn::as_field(cfg, values), two);
  ASSERT_NE(norms[0], norms[1]);
  std::size_t arg = norms[0] > norms[1] ? 0 : 1;
  Tensor single(1, 2);
  single[0] = two(arg, 0);
  single[1] = two(arg, 1);
  std::vector<Tensor> both = penalty_grad(two);
  std::vector<Tensor> only = penalty_grad(single);
  ASSERT_EQ(both.size(), only.size());
  for (std::size_t i = 0; i < both.size(); ++i) {
    for (std::size_t j = 0; j < both[i].size(); ++j) {
      EXPECT_NEAR(both[i][j], only[i][j], 1e-14);
    }
  }
}

}  // namespace
}  // namespace lipgan::penalty
