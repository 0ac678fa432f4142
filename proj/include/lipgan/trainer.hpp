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

// Alternating critic / generator training on toy data.
//
// Each iteration runs n_critic critic steps on
//
//   E_fake[phi(f)] + E_real[varphi(f)] + penalty(|grad_x f| on blend points)
//
// followed by one generator step on E_z[psi(f(g(z)))]. The step graphs are
// built once and re-bound with fresh batches and parameters every step.

#ifndef LIPGAN_TRAINER_HPP
#define LIPGAN_TRAINER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lipgan/adam.hpp"
#include "lipgan/error.hpp"
#include "lipgan/field.hpp"
#include "lipgan/graph.hpp"
#include "lipgan/lipschitz_penalty.hpp"
#include "lipgan/loss_metrics.hpp"
#include "lipgan/mlp.hpp"
#include "lipgan/synthetic.hpp"

namespace lipgan::train {

struct TrainConfig {
  loss::MetricKind metric = loss::MetricKind::kLogistic;
  std::optional<double> alpha;  // quadratic / hinge only
  penalty::PenaltySpec penalty{.kind = penalty::PenaltyKind::kMaxGp, .lambda = 1.0};

  nn::MlpConfig critic_cfg{};
  nn::MlpConfig gen_cfg{.input_dim = 2, .hidden_width = 64, .depth = 2, .output_dim = 2};

  AdamConfig adam{};
  std::size_t n_critic = 5;
  std::size_t iterations = 1000;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  SyntheticSpec data = two_gaussians({-1.0, 0.0}, {1.0, 0.0}, 0.1);
  // When set, fake batches come from this distribution instead of the
  // generator.
  std::optional<SyntheticSpec> fake_data;
  bool fix_generator = false;

  std::size_t drift_window = 200;
  Box field_box{-3.0, 3.0, -3.0, 3.0};
  std::size_t field_resolution = 21;

  loss::LossMetric make_loss() const { return loss::make_metric(metric, alpha); }

  void validate() const {
    if (n_critic < 1) throw ConfigError("n_critic must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("lr must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (drift_window < 1) throw ConfigError("drift_window must be >= 1");
    if (field_resolution < 2) throw ConfigError("field_resolution must be >= 2");
    make_loss();
    penalty.validate();
    critic_cfg.validate();
    gen_cfg.validate();
    data.validate();
    if (critic_cfg.output_dim != 1) throw ConfigError("critic output_dim must be 1");
    if (critic_cfg.input_dim != data.dim()) {
      throw ConfigError("critic input_dim " + std::to_string(critic_cfg.input_dim) +
                        " does not match data dimension " + std::to_string(data.dim()));
    }
    if (gen_cfg.output_dim != data.dim()) {
      throw ConfigError("generator output_dim does not match data dimension");
    }
    if (fake_data) {
      fake_data->validate();
      if (fake_data->dim() != data.dim()) {
        throw ConfigError("fake data dimension does not match real data dimension");
      }
      if (!fix_generator) throw ConfigError("fake data requires fix_generator = true");
    }
  }
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct FieldGrid {
  Box box;
  std::size_t nx = 0, ny = 0;
  // Row-major with x fastest: index = iy * nx + ix.
  std::vector<double> values;
  std::vector<std::array<double, 2>> gradients;

  std::array<double, 2> point(std::size_t ix, std::size_t iy) const {
    return {box.x_lo + (box.x_hi - box.x_lo) * static_cast<double>(ix) / static_cast<double>(nx - 1),
            box.y_lo + (box.y_hi - box.y_lo) * static_cast<double>(iy) / static_cast<double>(ny - 1)};
  }
};

// Values and input gradients of a 2-D field on an nx x ny lattice.
inline FieldGrid field_grid(const Field& f, const Box& box, std::size_t nx, std::size_t ny) {
  if (nx < 2 || ny < 2) throw ContractError("field_grid: resolution must be >= 2 per axis");
  if (!(box.x_lo < box.x_hi) || !(box.y_lo < box.y_hi)) {
    throw ContractError("field_grid: empty box");
  }
  FieldGrid grid{box, nx, ny, {}, {}};
  Tensor pts(nx * ny, 2);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      auto p = grid.point(ix, iy);
      pts(iy * nx + ix, 0) = p[0];
      pts(iy * nx + ix, 1) = p[1];
    }
  }
  FieldSample s = sample_field(f, pts);
  grid.values.assign(s.values.values().begin(), s.values.values().end());
  grid.gradients.resize(nx * ny);
  for (std::size_t i = 0; i < nx * ny; ++i) {
    grid.gradients[i] = {s.gradients(i, 0), s.gradients(i, 1)};
  }
  return grid;
}

inline FieldGrid field_grid(const nn::MlpConfig& cfg, const nn::Parameters& params,
                            const Box& box, std::size_t nx, std::size_t ny) {
  if (cfg.input_dim != 2) {
    throw UnsupportedOpError("field_grid: critic input must be 2-D, got " +
                             std::to_string(cfg.input_dim));
  }
  return field_grid(nn::as_field(cfg, params), box, nx, ny);
}

// Population standard deviation of the last `window` entries.
inline double drift_statistic(std::span<const double> series, std::size_t window) {
  if (window == 0) throw ContractError("drift_statistic: window must be >= 1");
  if (window > series.size()) {
    throw ContractError("drift_statistic: window " + std::to_string(window) +
                        " exceeds series length " + std::to_string(series.size()));
  }
  auto tail = series.subspan(series.size() - window);
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(window);
  double ss = 0.0;
  for (double v : tail) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(window));
}

// Fraction of samples whose nearest centre is each mode.
inline std::vector<double> mode_coverage(const Tensor& samples,
                                         const std::vector<std::vector<double>>& modes) {
  if (modes.empty()) throw ContractError("mode_coverage: no modes");
  if (samples.rows() == 0) throw ContractError("mode_coverage: no samples");
  std::vector<double> frac(modes.size(), 0.0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (modes[m].size() != samples.cols()) throw ContractError("mode_coverage: dimension");
      double d = 0.0;
      for (std::size_t k = 0; k < samples.cols(); ++k) {
        d += (samples(i, k) - modes[m][k]) * (samples(i, k) - modes[m][k]);
      }
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    frac[best] += 1.0;
  }
  for (double& v : frac) v /= static_cast<double>(samples.rows());
  return frac;
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

struct CriticStepResult {
  double loss = 0.0;       // objective + penalty, before the update
  double objective = 0.0;
  double penalty = 0.0;
  double k_hat = 0.0;      // max gradient norm over the penalty points
  double mean_f_real = 0.0;
  double mean_f_fake = 0.0;
  std::vector<double> norms;
};

// Critic loss graph for fixed network shape, metric and penalty.
class CriticStep {
 public:
  CriticStep(const nn::MlpConfig& cfg, const loss::LossMetric& metric,
             const penalty::PenaltySpec& spec)
      : cfg_(cfg), graph_(std::make_unique<ad::Graph>()) {
    ad::Graph& g = *graph_;
    real_ = g.input("real");
    fake_ = g.input("fake");
    points_ = g.input("penalty_points");
    theta_ = nn::parameter_inputs(g, cfg, "critic.");
    Field f = [this](ad::Var x) { return nn::mlp_forward(cfg_, theta_, x); };
    ad::Var f_real = f(real_);
    ad::Var f_fake = f(fake_);
    objective_ = loss::disc_objective(metric, f_fake, f_real);
    mean_real_ = ad::mean(f_real);
    mean_fake_ = ad::mean(f_fake);
    norms_ = penalty::grad_norms(f, points_);
    if (spec.lambda > 0.0) {
      penalty_ = penalty::apply_penalty(spec, norms_);
      loss_ = objective_ + penalty_;
    } else {
      penalty_ = g.constant(0.0);
      loss_ = objective_;
    }
    grads_ = g.gradients(loss_, theta_);
  }

  // Evaluates the loss at `params` and applies one Adam step to them.
  CriticStepResult step(nn::Parameters& params, AdamState& state, const AdamConfig& adam,
                        const Tensor& real, const Tensor& fake, const Tensor& penalty_points) {
    if (real.rows() == 0 || fake.rows() == 0 || penalty_points.rows() == 0) {
      throw ContractError("critic_step: empty batch");
    }
    ad::Graph& g = *graph_;
    g.bind(real_, real);
    g.bind(fake_, fake);
    g.bind(points_, penalty_points);
    nn::bind_parameters(g, theta_, params);
    std::vector<ad::Var> outs{loss_, objective_, penalty_, norms_, mean_real_, mean_fake_};
    outs.insert(outs.end(), grads_.begin(), grads_.end());
    g.evaluate(outs);

    CriticStepResult r;
    r.loss = g.value(loss_).item();
    r.objective = g.value(objective_).item();
    r.penalty = g.value(penalty_).item();
    r.mean_f_real = g.value(mean_real_).item();
    r.mean_f_fake = g.value(mean_fake_).item();
    const Tensor& n = g.value(norms_);
    r.norms.assign(n.values().begin(), n.values().end());
    for (double v : r.norms) r.k_hat = std::max(r.k_hat, v);

    std::vector<Tensor> grads;
    grads.reserve(grads_.size());
    for (ad::Var v : grads_) grads.push_back(g.value(v));
    adam_update(params, grads, state, adam);
    return r;
  }

  // Names the first non-finite term at the current bindings.
  std::string failing_term() {
    ad::Graph& g = *graph_;
    for (auto [v, name] : {std::pair{objective_, "discriminator objective"},
                           std::pair{penalty_, "penalty"}, std::pair{loss_, "loss gradient"}}) {
      try {
        g.eval(v);
      } catch (const Error&) {
        return name;
      }
    }
    return "loss gradient";
  }

 private:
  nn::MlpConfig cfg_;
  std::unique_ptr<ad::Graph> graph_;
  ad::Var real_, fake_, points_;
  std::vector<ad::Var> theta_;
  ad::Var objective_, penalty_, loss_, norms_, mean_real_, mean_fake_;
  std::vector<ad::Var> grads_;
};

// Generator loss graph: mean(psi(f(g(z)))) with the critic held fixed.
class GeneratorStep {
 public:
  GeneratorStep(const nn::MlpConfig& gen_cfg, const nn::MlpConfig& critic_cfg)
      : graph_(std::make_unique<ad::Graph>()) {
    ad::Graph& g = *graph_;
    noise_ = g.input("noise");
    gen_theta_ = nn::parameter_inputs(g, gen_cfg, "gen.");
    critic_theta_ = nn::parameter_inputs(g, critic_cfg, "critic.");
    samples_ = nn::mlp_forward(gen_cfg, gen_theta_, noise_);
    loss_ = loss::gen_objective(nn::mlp_forward(critic_cfg, critic_theta_, samples_));
    grads_ = g.gradients(loss_, gen_theta_);
  }

  double step(nn::Parameters& gen_params, AdamState& state, const AdamConfig& adam,
              const nn::Parameters& critic_params, const Tensor& noise) {
    ad::Graph& g = *graph_;
    g.bind(noise_, noise);
    nn::bind_parameters(g, gen_theta_, gen_params);
    nn::bind_parameters(g, critic_theta_, critic_params);
    std::vector<ad::Var> outs{loss_};
    outs.insert(outs.end(), grads_.begin(), grads_.end());
    g.evaluate(outs);
    double loss = g.value(loss_).item();
    std::vector<Tensor> grads;
    for (ad::Var v : grads_) grads.push_back(g.value(v));
    adam_update(gen_params, grads, state, adam);
    return loss;
  }

  Tensor generate(const nn::Parameters& gen_params, const Tensor& noise) {
    ad::Graph& g = *graph_;
    g.bind(noise_, noise);
    nn::bind_parameters(g, gen_theta_, gen_params);
    return g.eval(samples_);
  }

 private:
  std::unique_ptr<ad::Graph> graph_;
  ad::Var noise_, samples_, loss_;
  std::vector<ad::Var> gen_theta_, critic_theta_, grads_;
};

template <class Rng>
Tensor sample_noise(std::size_t n, std::size_t dim, Rng& rng) {
  std::normal_distribution<double> n01;
  Tensor z(n, dim);
  for (double& v : z.values()) v = n01(rng);
  return z;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainReport {
  std::vector<double> disc_loss;
  std::vector<double> gen_loss;
  std::vector<double> mean_f_real;
  std::vector<double> mean_f_fake;
  std::vector<double> k_hat;
  FieldGrid field;
  double drift = 0.0;
  nn::Parameters critic_params;
  nn::Parameters gen_params;
};

inline std::uint64_t generator_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

// Runs the whole schedule. Any non-finite loss or gradient aborts with a
// NumericError naming the iteration and the failing term.
inline TrainReport train(const TrainConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const loss::LossMetric metric = cfg.make_loss();
  const std::size_t dim = cfg.data.dim();

  TrainReport rep;
  rep.critic_params = nn::init_mlp(cfg.critic_cfg, cfg.seed);
  rep.gen_params = nn::init_mlp(cfg.gen_cfg, generator_seed(cfg.seed));
  AdamState critic_state, gen_state;

  CriticStep critic(cfg.critic_cfg, metric, cfg.penalty);
  GeneratorStep generator(cfg.gen_cfg, cfg.critic_cfg);
  penalty::SMaxList smax(cfg.penalty.kind == penalty::PenaltyKind::kMaxGp
                             ? cfg.penalty.smax_capacity
                             : 0);

  auto fake_batch = [&]() {
    if (cfg.fake_data) return sample_synthetic(*cfg.fake_data, cfg.batch_size, rng);
    return generator.generate(rep.gen_params,
                              sample_noise(cfg.batch_size, cfg.gen_cfg.input_dim, rng));
  };
  auto fail = [](std::size_t it, const std::string& where, const std::string& term,
                  const char* detail) {
    throw NumericError("training aborted at iteration " + std::to_string(it) + ", " + where +
                       ": non-finite " + term + " (" + detail + ")");
  };

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    CriticStepResult last;
    for (std::size_t c = 0; c < cfg.n_critic; ++c) {
      Tensor real = sample_synthetic(cfg.data, cfg.batch_size, rng);
      Tensor fake;
      try {
        fake = fake_batch();
      } catch (const NumericError& e) {
        fail(it, "generator sampling", "generated sample", e.what());
      }
      Tensor points = penalty::sample_blend(real, fake, rng);
      if (!smax.empty()) points = penalty::stack_rows(points, smax.points(dim));
      try {
        last = critic.step(rep.critic_params, critic_state, cfg.adam, real, fake, points);
      } catch (const NumericError& e) {
        fail(it, "critic step " + std::to_string(c), critic.failing_term(), e.what());
      }
      if (!std::isfinite(last.loss)) fail(it, "critic step", "critic loss", "value");
      for (const Tensor& p : rep.critic_params) {
        if (!p.all_finite()) fail(it, "critic step", "critic parameters", "after update");
      }
      smax.update(points, last.norms);
    }

    double gen_loss = -last.mean_f_fake;
    if (!cfg.fix_generator) {
      Tensor noise = sample_noise(cfg.batch_size, cfg.gen_cfg.input_dim, rng);
      try {
        gen_loss = generator.step(rep.gen_params, gen_state, cfg.adam, rep.critic_params, noise);
      } catch (const NumericError& e) {
        fail(it, "generator step", "generator loss", e.what());
      }
      for (const Tensor& p : rep.gen_params) {
        if (!p.all_finite()) fail(it, "generator step", "generator parameters", "after update");
      }
    }

    rep.disc_loss.push_back(last.loss);
    rep.gen_loss.push_back(gen_loss);
    rep.mean_f_real.push_back(last.mean_f_real);
    rep.mean_f_fake.push_back(last.mean_f_fake);
    rep.k_hat.push_back(last.k_hat);
  }

  if (dim == 2) {
    rep.field = field_grid(cfg.critic_cfg, rep.critic_params, cfg.field_box,
                           cfg.field_resolution, cfg.field_resolution);
  }
  if (!rep.mean_f_real.empty()) {
    rep.drift = drift_statistic(rep.mean_f_real,
                                std::min(cfg.drift_window, rep.mean_f_real.size()));
  }
  return rep;
}

}  // namespace lipgan::train

#endif  // LIPGAN_TRAINER_HPP
