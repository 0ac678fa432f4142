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
#include <string>
#include <vector>

#include "lipgan/trainer.hpp"
#include "test_util.hpp"

namespace lipgan::train {
namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.critic_cfg.hidden_width = 16;
  c.gen_cfg.hidden_width = 16;
  c.batch_size = 64;
  return c;
}

// A depth-1 relu network computing f(x) = x1 on 2-D inputs.
nn::Parameters first_coordinate_critic() {
  return {Tensor::from_rows({{1.0, -1.0}, {0.0, 0.0}}), Tensor(1, 2),
          Tensor::from_rows({{1.0}, {-1.0}}), Tensor(1, 1)};
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

TEST(InitMlp, DeterministicAndCounted) {
  nn::MlpConfig cfg{.input_dim = 2, .hidden_width = 4, .depth = 1};
  EXPECT_EQ(nn::init_mlp(cfg, 7), nn::init_mlp(cfg, 7));
  EXPECT_NE(nn::init_mlp(cfg, 7), nn::init_mlp(cfg, 8));
  EXPECT_EQ(nn::count_parameters(nn::init_mlp(cfg, 1)), 17u);
  EXPECT_EQ(cfg.parameter_count(), 17u);
}

TEST(InitMlp, WeightsWithinGlorotBound) {
  nn::MlpConfig cfg{.input_dim = 3, .hidden_width = 5, .depth = 2};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    nn::Parameters p = nn::init_mlp(cfg, seed);
    for (std::size_t i = 0; i < p.size(); i += 2) {
      double bound = std::sqrt(6.0 / static_cast<double>(p[i].rows() + p[i].cols()));
      for (double w : p[i].values()) ASSERT_LE(std::abs(w), bound);
      for (double b : p[i + 1].values()) ASSERT_EQ(b, 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<Tensor> p{Tensor::from_rows({{1.5, -2.0}})};
  std::vector<Tensor> g{Tensor(1, 2)};
  AdamState s;
  adam_update(p, g, s, AdamConfig{});
  EXPECT_EQ(p[0], Tensor::from_rows({{1.5, -2.0}}));
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g0 : {3.0, -0.25}) {
    std::vector<Tensor> p{Tensor::scalar(0.0)};
    AdamState s;
    adam_update(p, {Tensor::scalar(g0)}, s, AdamConfig{.lr = 0.01, .beta1 = 0.5});
    EXPECT_NEAR(p[0].item(), -0.01 * (g0 > 0 ? 1.0 : -1.0), 1e-9);
  }
}

TEST(Adam, QuadraticBowlMatchesReimplementation) {
  // Minimize 0.5 * sum(c_i x_i^2), gradient c_i x_i.
  const std::vector<double> c{1.0, 4.0, 0.3};
  const AdamConfig cfg{.lr = 0.05, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8};
  std::vector<Tensor> p{Tensor::row(std::vector{1.0, -2.0, 0.5})};
  AdamState s;
  std::vector<double> x{1.0, -2.0, 0.5}, m(3, 0.0), v(3, 0.0);
  for (int step = 1; step <= 10; ++step) {
    Tensor g(1, 3);
    for (int i = 0; i < 3; ++i) g[i] = c[i] * p[0][i];
    adam_update(p, {g}, s, cfg);
    for (int i = 0; i < 3; ++i) {
      double gi = c[i] * x[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      double mh = m[i] / (1.0 - std::pow(0.9, step));
      double vh = v[i] / (1.0 - std::pow(0.999, step));
      x[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
    for (int i = 0; i < 3; ++i) ASSERT_NEAR(p[0][i], x[i], 1e-12);
  }
}

TEST(Adam, ShapeMismatchIsAContractError) {
  std::vector<Tensor> p{Tensor(2, 2)};
  AdamState s;
  EXPECT_THROW(adam_update(p, {Tensor(2, 3)}, s, AdamConfig{}), ContractError);
  EXPECT_THROW(adam_update(p, {}, s, AdamConfig{}), ContractError);
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

TEST(Synthetic, ParallelLinesHaveFixedFirstCoordinate) {
  std::mt19937_64 rng(1);
  Tensor x = sample_synthetic(parallel_lines(1.0), 500, rng);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    EXPECT_EQ(x(i, 0), 1.0);
    EXPECT_GE(x(i, 1), 0.0);
    EXPECT_LE(x(i, 1), 1.0);
  }
}

TEST(Synthetic, DiscreteFrequenciesWithinBinomialBound) {
  std::mt19937_64 rng(2);
  Tensor x = sample_synthetic(discrete_points({{0.0, 0.0}, {1.0, 1.0}}, {0.5, 0.5}), 10000, rng);
  double a = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) a += x(i, 0) == 0.0 ? 1 : 0;
  EXPECT_GE(a / 1e4, 0.45);
  EXPECT_LE(a / 1e4, 0.55);
}

TEST(Synthetic, StratifiedBatchesHaveExactCounts) {
  std::mt19937_64 rng(3);
  SyntheticSpec s = discrete_points({{0.0}, {1.0}, {2.0}}, {0.5, 0.25, 0.25}, true);
  Tensor x = sample_synthetic(s, 8, rng);
  std::vector<int> counts(3, 0);
  for (double v : x.values()) counts[static_cast<int>(v)] += 1;
  EXPECT_EQ(counts, (std::vector{4, 2, 2}));
  EXPECT_EQ(stratified_counts({0.3, 0.3, 0.4}, 10), (std::vector<std::size_t>{3, 3, 4}));
  EXPECT_EQ(stratified_counts({0.5, 0.5}, 3), (std::vector<std::size_t>{2, 1}));
}

TEST(Synthetic, GaussianSampleMeanNearMean) {
  std::mt19937_64 rng(4);
  const std::size_t n = 4000;
  Tensor x = sample_synthetic(single_gaussian({2.0, -1.0}, 0.5), n, rng);
  for (std::size_t k = 0; k < 2; ++k) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, k);
    m /= static_cast<double>(n);
    EXPECT_NEAR(m, k == 0 ? 2.0 : -1.0, 4 * 0.5 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(Synthetic, TwoDensityRegionsStayInBoxes) {
  SyntheticSpec s;
  s.kind = DataKind::kTwoDensityRegions;
  s.region_a = {0.0, 1.0, 0.0, 1.0};
  s.region_b = {2.0, 3.0, 0.0, 1.0};
  s.mass_a = 0.8;
  std::mt19937_64 rng(5);
  Tensor x = sample_synthetic(s, 5000, rng);
  double in_a = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    bool a = x(i, 0) <= 1.0;
    EXPECT_TRUE(a || (x(i, 0) >= 2.0 && x(i, 0) <= 3.0));
    in_a += a ? 1 : 0;
  }
  EXPECT_NEAR(in_a / 5000.0, 0.8, 0.03);
}

TEST(Synthetic, InvalidSpecsAreConfigErrors) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_synthetic(discrete_points({{0.0}, {1.0}}, {0.5, 0.6}), 4, rng),
               ConfigError);
  EXPECT_THROW(sample_synthetic(discrete_points({{0.0}, {1.0, 2.0}}, {0.5, 0.5}), 4, rng),
               ConfigError);
  SyntheticSpec g = two_gaussians({0.0, 0.0}, {1.0, 1.0}, -0.1);
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_THROW(parse_data_kind("moons"), ConfigError);
  EXPECT_THROW(sample_synthetic(parallel_lines(1.0), 0, rng), ContractError);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

TEST(Drift, Examples) {
  EXPECT_EQ(drift_statistic(std::vector{2.0, 2.0, 2.0}, 3), 0.0);
  EXPECT_EQ(drift_statistic(std::vector{0.0, 1.0, 0.0, 1.0, 0.0, 1.0}, 4), 0.5);
  EXPECT_THROW(drift_statistic(std::vector{1.0}, 0), ContractError);
  EXPECT_THROW(drift_statistic(std::vector{1.0}, 2), ContractError);
  std::vector<double> s{0.3, -1.2, 4.0, 2.5, 0.1};
  EXPECT_NEAR(drift_statistic(s, 3),
              testing_util::population_sd(std::vector(s.end() - 3, s.end())), 1e-15);
}

TEST(FieldGridTest, LinearAndConstantFields) {
  FieldGrid g = field_grid(linear_field({1.0, 0.0}), Box{-1, 1, -2, 2}, 5, 4);
  ASSERT_EQ(g.values.size(), 20u);
  ASSERT_EQ(g.gradients.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(g.gradients[i][0], 1.0);
    EXPECT_EQ(g.gradients[i][1], 0.0);
  }
  EXPECT_EQ(g.values[0], -1.0);
  EXPECT_EQ(g.values[4], 1.0);
  EXPECT_EQ(g.point(4, 3)[1], 2.0);

  nn::MlpConfig cfg{.input_dim = 2, .hidden_width = 3, .depth = 1};
  nn::Parameters zero = nn::init_mlp(cfg, 1);
  for (Tensor& t : zero) std::fill(t.values().begin(), t.values().end(), 0.0);
  zero.back()[0] = 3.0;
  FieldGrid c = field_grid(cfg, zero, Box{}, 3, 3);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(c.values[i], 3.0);
    EXPECT_EQ(c.gradients[i][0], 0.0);
    EXPECT_EQ(c.gradients[i][1], 0.0);
  }
}

TEST(FieldGridTest, RejectsNon2DCriticAndCoarseGrid) {
  nn::MlpConfig cfg{.input_dim = 3, .hidden_width = 3, .depth = 1};
  EXPECT_THROW(field_grid(cfg, nn::init_mlp(cfg, 0), Box{}, 4, 4), UnsupportedOpError);
  EXPECT_THROW(field_grid(linear_field({1.0, 0.0}), Box{}, 1, 4), ContractError);
}

TEST(ModeCoverage, NearestModeFractions) {
  Tensor x = Tensor::from_rows({{-1.1, 0.0}, {-0.8, 0.1}, {0.9, 0.0}, {5.0, 5.0}});
  std::vector<double> cov = mode_coverage(x, {{-1.0, 0.0}, {1.0, 0.0}});
  EXPECT_EQ(cov, (std::vector{0.5, 0.5}));
}

// ---------------------------------------------------------------------------
// Critic and generator steps
// ---------------------------------------------------------------------------

TEST(CriticStepTest, LinearCriticAscendsTowardReal) {
  // f(x) = w x on 1-D point masses fake = {0}, real = {1}.
  ad::Graph g;
  ad::Var w = g.input("w");
  ad::Var fake = g.constant(Tensor::scalar(0.0));
  ad::Var real = g.constant(Tensor::scalar(1.0));
  loss::LossMetric lin = loss::make_metric(loss::MetricKind::kLinear);
  ad::Var obj = loss::disc_objective(lin, ad::matmul(fake, w), ad::matmul(real, w));
  std::vector<Tensor> params{Tensor::scalar(0.2)};
  g.bind(w, params[0]);
  std::vector<ad::Var> wrt{w};
  std::vector<Tensor> grad = g.gradient(obj, wrt);
  EXPECT_EQ(grad[0].item(), -1.0);
  AdamState s;
  adam_update(params, grad, s, AdamConfig{});
  EXPECT_GT(params[0].item(), 0.2);
}

TEST(CriticStepTest, UnpenalizedStepsSeparateRealFromFake) {
  nn::MlpConfig cfg{.input_dim = 1, .hidden_width = 8, .depth = 1};
  CriticStep step(cfg, loss::make_metric(loss::MetricKind::kLinear),
                  penalty::PenaltySpec{.lambda = 0.0});
  nn::Parameters p = nn::init_mlp(cfg, 3);
  AdamState s;
  Tensor real = Tensor::scalar(1.0), fake = Tensor::scalar(0.0), pts = Tensor::scalar(0.5);
  CriticStepResult first = step.step(p, s, AdamConfig{.lr = 1e-2}, real, fake, pts);
  CriticStepResult last;
  for (int i = 0; i < 50; ++i) last = step.step(p, s, AdamConfig{.lr = 1e-2}, real, fake, pts);
  EXPECT_GT(last.mean_f_real - last.mean_f_fake, first.mean_f_real - first.mean_f_fake);
  EXPECT_EQ(first.penalty, 0.0);
}

TEST(CriticStepTest, LargeMaxGpShrinksGradientNorm) {
  nn::MlpConfig cfg{.input_dim = 1, .hidden_width = 8, .depth = 1};
  CriticStep step(cfg, loss::make_metric(loss::MetricKind::kLinear),
                  penalty::PenaltySpec{.kind = penalty::PenaltyKind::kMaxGp, .lambda = 1e3});
  nn::Parameters p = nn::init_mlp(cfg, 5);
  for (std::size_t i = 0; i < p.size(); i += 2) {
    for (double& w : p[i].values()) w *= 3.0;
  }
  AdamState s;
  std::mt19937_64 rng(0);
  Tensor real(32, 1, 1.0), fake(32, 1, 0.0);
  std::vector<double> k;
  for (int i = 0; i < 200; ++i) {
    Tensor pts = penalty::sample_blend(real, fake, rng);
    k.push_back(step.step(p, s, AdamConfig{.lr = 1e-2}, real, fake, pts).k_hat);
  }
  EXPECT_LT(k.back(), 0.1 * k.front());
  auto window_mean = [&](std::size_t from) {
    double m = 0;
    for (std::size_t i = from; i < from + 50; ++i) m += k[i];
    return m / 50.0;
  };
  EXPECT_LT(window_mean(150), window_mean(0));
}

TEST(CriticStepTest, IdenticalBatchesConvergeToConstant) {
  TrainConfig c = small_config();
  c.data = discrete_points({{0.0, 0.0}, {1.0, 0.5}, {-0.5, 1.0}, {0.3, -1.0}},
                           {0.25, 0.25, 0.25, 0.25}, true);
  c.fake_data = c.data;
  c.fix_generator = true;
  c.iterations = 400;  // 2000 critic steps
  c.adam.lr = 1e-3;
  TrainReport r = train(c);
  Tensor atoms = Tensor::from_rows({{0.0, 0.0}, {1.0, 0.5}, {-0.5, 1.0}, {0.3, -1.0}});
  FieldSample f = sample_field(nn::as_field(c.critic_cfg, r.critic_params), atoms);
  auto v = f.values.values();
  EXPECT_LE(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()),
            1e-3);
}

TEST(GeneratorStepTest, SamplesMoveUpTheCritic) {
  nn::MlpConfig critic_cfg{.input_dim = 2, .hidden_width = 2, .depth = 1};
  nn::MlpConfig gen_cfg{.input_dim = 2, .hidden_width = 8, .depth = 1, .output_dim = 2};
  GeneratorStep step(gen_cfg, critic_cfg);
  nn::Parameters gp = nn::init_mlp(gen_cfg, 2);
  AdamState s;
  std::mt19937_64 rng(1);
  Tensor z = sample_noise(128, 2, rng);
  auto mean_x1 = [&]() {
    Tensor x = step.generate(gp, z);
    double m = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, 0);
    return m / static_cast<double>(x.rows());
  };
  double before = mean_x1();
  for (int i = 0; i < 100; ++i) {
    double current = mean_x1();
    // The reported loss is psi(f) = -x1 averaged, before the update.
    EXPECT_NEAR(step.step(gp, s, AdamConfig{.lr = 1e-2}, first_coordinate_critic(), z),
                -current, 1e-12);
  }
  EXPECT_GT(mean_x1(), before + 0.5);
}

TEST(GeneratorStepTest, ConstantCriticLeavesGenerator) {
  nn::MlpConfig critic_cfg{.input_dim = 2, .hidden_width = 4, .depth = 1};
  nn::MlpConfig gen_cfg{.input_dim = 2, .hidden_width = 4, .depth = 1, .output_dim = 2};
  nn::Parameters critic = nn::init_mlp(critic_cfg, 1);
  for (Tensor& t : critic) std::fill(t.values().begin(), t.values().end(), 0.0);
  critic.back()[0] = -2.0;
  GeneratorStep step(gen_cfg, critic_cfg);
  nn::Parameters gp = nn::init_mlp(gen_cfg, 3);
  const nn::Parameters before = gp;
  AdamState s;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(step.step(gp, s, AdamConfig{}, critic, sample_noise(16, 2, rng)), 2.0);
  }
  EXPECT_EQ(gp, before);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TEST(Train, ZeroIterationsGivesEmptySeriesAndInitialField) {
  TrainConfig c = small_config();
  c.iterations = 0;
  TrainReport r = train(c);
  EXPECT_TRUE(r.disc_loss.empty());
  EXPECT_TRUE(r.k_hat.empty());
  EXPECT_EQ(r.field.values.size(), c.field_resolution * c.field_resolution);
  EXPECT_EQ(r.critic_params, nn::init_mlp(c.critic_cfg, c.seed));
}

TEST(Train, SeriesLengthsMatchIterations) {
  TrainConfig c = small_config();
  c.iterations = 7;
  TrainReport r = train(c);
  for (const auto* s : {&r.disc_loss, &r.gen_loss, &r.mean_f_real, &r.mean_f_fake, &r.k_hat}) {
    EXPECT_EQ(s->size(), 7u);
  }
}

TEST(Train, FullRunIsDeterministic) {
  TrainConfig c = small_config();
  c.iterations = 20;
  c.penalty.smax_capacity = 4;
  TrainReport a = train(c);
  TrainReport b = train(c);
  EXPECT_EQ(a.disc_loss, b.disc_loss);
  EXPECT_EQ(a.gen_loss, b.gen_loss);
  EXPECT_EQ(a.k_hat, b.k_hat);
  EXPECT_EQ(a.critic_params, b.critic_params);
  EXPECT_EQ(a.gen_params, b.gen_params);
  EXPECT_EQ(a.field.values, b.field.values);
  c.seed = 1;
  EXPECT_NE(train(c).disc_loss, a.disc_loss);
}

TEST(Train, FixedGeneratorIsBitIdentical) {
  TrainConfig c = small_config();
  c.iterations = 10;
  c.fix_generator = true;
  TrainReport r = train(c);
  EXPECT_EQ(r.gen_params, nn::init_mlp(c.gen_cfg, generator_seed(c.seed)));
}

TEST(Train, NonFiniteLossAbortsWithIteration) {
  TrainConfig c = small_config();
  c.metric = loss::MetricKind::kExponential;
  c.penalty.lambda = 0.0;
  c.adam.lr = 5.0;
  c.fix_generator = true;
  c.data = single_gaussian({5.0, 0.0}, 0.1);
  c.fake_data = single_gaussian({-5.0, 0.0}, 0.1);
  c.iterations = 500;
  try {
    train(c);
    FAIL() << "expected a numeric abort";
  } catch (const NumericError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("iteration"), std::string::npos) << msg;
    EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
  }
}

TEST(Train, InvalidConfigsAreRejected) {
  TrainConfig c = small_config();
  c.n_critic = 0;
  EXPECT_THROW(train(c), ConfigError);
  c = small_config();
  c.adam.lr = 0.0;
  EXPECT_THROW(train(c), ConfigError);
  c = small_config();
  c.fake_data = c.data;
  EXPECT_THROW(train(c), ConfigError);
  c = small_config();
  c.critic_cfg.input_dim = 3;
  EXPECT_THROW(train(c), ConfigError);
  c = small_config();
  c.metric = loss::MetricKind::kHinge;
  EXPECT_THROW(train(c), ConfigError);
}

TEST(Train, UnpenalizedLinearCriticKeepsGrowing) {
  TrainConfig c = small_config();
  c.metric = loss::MetricKind::kLinear;
  c.penalty.lambda = 0.0;
  c.fix_generator = true;
  c.data = single_gaussian({1.0, 0.0}, 0.1);
  c.fake_data = single_gaussian({-1.0, 0.0}, 0.1);
  c.iterations = 2000;
  TrainReport r = train(c);
  EXPECT_GT(r.k_hat[1999], r.k_hat[499]);
}

TEST(Train, PenalizedAdmissibleLossIsBoundedBelow) {
  TrainConfig c = small_config();
  c.metric = loss::MetricKind::kSqrtSoftplus;
  c.iterations = 300;
  TrainReport r = train(c);
  for (double v : r.disc_loss) {
    ASSERT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

TEST(Train, LogisticDriftsLessThanLinearOnSharedSeed) {
  TrainConfig c = small_config();
  c.iterations = 1000;
  c.metric = loss::MetricKind::kLinear;
  double wgan = train(c).drift;
  c.metric = loss::MetricKind::kLogistic;
  double lgan = train(c).drift;
  EXPECT_LT(lgan, wgan);
}

TEST(Train, GeneratorReachesBothModes) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig c = small_config();
    c.seed = seed;
    c.iterations = 5000;
    TrainReport r = train(c);
    GeneratorStep g(c.gen_cfg, c.critic_cfg);
    std::mt19937_64 rng(seed + 17);
    Tensor x = g.generate(r.gen_params, sample_noise(1000, 2, rng));
    // Mean of the generated points assigned to each mode.
    bool ok = true;
    for (const auto& mode : c.data.means) {
      double sx = 0, sy = 0, n = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if ((x(i, 0) > 0) == (mode[0] > 0)) {
          sx += x(i, 0);
          sy += x(i, 1);
          n += 1;
        }
      }
      ok = ok && n > 0 && std::hypot(sx / n - mode[0], sy / n - mode[1]) <= 0.2;
    }
    hits += ok ? 1 : 0;
  }
  EXPECT_GE(hits, 4);
}

}  // namespace
}  // namespace lipgan::train
