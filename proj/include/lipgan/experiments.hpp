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

// Canned experiments shared by the `verify` command and the acceptance
// runner. Each returns raw measurements; callers own the thresholds.

#ifndef LIPGAN_EXPERIMENTS_HPP
#define LIPGAN_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lipgan/fd_check.hpp"
#include "lipgan/graph.hpp"
#include "lipgan/lipschitz_penalty.hpp"
#include "lipgan/loss_metrics.hpp"
#include "lipgan/mlp.hpp"
#include "lipgan/ot/ot_oracle.hpp"
#include "lipgan/trainer.hpp"

namespace lipgan::experiments {

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

struct GradSuiteReport {
  std::size_t networks = 0;
  double first_order = 0.0;  // max relative error, d mean(f) / d theta
  double gp = 0.0;           // max relative error, d GP / d theta
  double maxgp = 0.0;        // max relative error, d MaxGP / d theta
};

// Random tanh MLPs with 1-3 hidden layers of width 2-64, built directly
// from graph operations. Both library activations have a slope jump at 0
// that central differences straddle whenever a pre-activation lands within
// epsilon of it, so the finite-difference oracle needs a smooth one. The
// first network always uses the largest shape.
inline GradSuiteReport grad_suite(std::size_t networks, std::uint64_t seed,
                                  double epsilon = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> depth(1, 3), width(2, 64), in_dim(1, 3);
  std::normal_distribution<double> n01;
  GradSuiteReport rep;
  rep.networks = networks;
  for (std::size_t net = 0; net < networks; ++net) {
    std::size_t d_in = in_dim(rng), w = width(rng), layers = depth(rng);
    if (net == 0) {
      d_in = 2;
      w = 64;
      layers = 3;
    }
    ad::Graph g;
    ad::Var x = g.input("x");
    std::vector<ad::Var> theta;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for (std::size_t l = 0; l <= layers; ++l) {
      std::size_t rows = l == 0 ? d_in : w;
      std::size_t cols = l == layers ? 1 : w;
      shapes.emplace_back(rows, cols);
      shapes.emplace_back(1, cols);
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      auto [rows, cols] = shapes[i];
      ad::Var v = g.input("theta" + std::to_string(i));
      Tensor t(rows, cols);
      const double sd = i % 2 == 0 ? 1.0 / std::sqrt(static_cast<double>(rows)) : 0.3;
      for (double& e : t.values()) e = sd * n01(rng);
      g.bind(v, t);
      theta.push_back(v);
    }
    Tensor pts(4, d_in);
    for (double& v : pts.values()) v = n01(rng);
    g.bind(x, pts);

    Field f = [&](ad::Var z) {
      for (std::size_t l = 0; l <= layers; ++l) {
        z = ad::add_row(ad::matmul(z, theta[2 * l]), theta[2 * l + 1]);
        if (l < layers) z = ad::tanh(z);
      }
      return z;
    };
    ad::Var norms = penalty::grad_norms(f, x);
    ad::Var gp = penalty::penalty_gp(norms, 1.0, 1.0);
    ad::Var maxgp = penalty::penalty_maxgp(norms, 1.0);
    rep.first_order = std::max(
        rep.first_order, ad::fd_check(g, ad::mean(f(x)), theta, epsilon).max_relative_error);
    rep.gp = std::max(rep.gp, ad::fd_check(g, gp, theta, epsilon).max_relative_error);
    rep.maxgp = std::max(rep.maxgp, ad::fd_check(g, maxgp, theta, epsilon).max_relative_error);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Loss metrics
// ---------------------------------------------------------------------------

struct AdmissibilityRow {
  std::string metric;
  bool admissible = false;
  bool expected = false;
};

// The six metrics at their default parameter. The first four are expected
// to satisfy the admissibility conditions, quadratic and hinge are not.
inline std::vector<AdmissibilityRow> admissibility_suite() {
  std::vector<AdmissibilityRow> rows;
  for (loss::MetricKind k : loss::kAllMetricKinds) {
    const bool has_alpha = k == loss::MetricKind::kQuadratic || k == loss::MetricKind::kHinge;
    loss::LossMetric m =
        loss::make_metric(k, has_alpha ? std::optional<double>(1.0) : std::nullopt);
    rows.push_back({std::string(loss::metric_name(k)), loss::check_admissible(m).admissible,
                    !has_alpha});
  }
  return rows;
}

// Max |numeric argmin - log(p_r / p_g)| under the logistic metric.
inline double closed_form_crosscheck(std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  loss::LossMetric vanilla = loss::make_metric(loss::MetricKind::kLogistic);
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    double pr = u(rng), pg = u(rng);
    worst = std::max(worst, std::abs(loss::pointwise_optimal(vanilla, pg, pr) - std::log(pr / pg)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Optimal transport
// ---------------------------------------------------------------------------

// Gaussian atoms, random or uniform masses.
template <class Rng>
ot::DiscreteDist random_dist(std::size_t n, std::size_t dim, Rng& rng, bool uniform) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Tensor atoms(n, dim);
  for (double& v : atoms.values()) v = n01(rng);
  if (uniform) return ot::uniform_dist(std::move(atoms));
  std::vector<double> m(n);
  double total = 0.0;
  for (double& v : m) total += (v = u(rng));
  for (double& v : m) v /= total;
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) head += m[i];
  m.back() = 1.0 - head;
  return {std::move(atoms), std::move(m)};
}

struct DualitySuiteReport {
  std::size_t instances = 0;
  double max_gap = 0.0;
  std::size_t failures = 0;
};

inline DualitySuiteReport duality_suite(std::size_t instances, std::size_t max_atoms,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(1, max_atoms);
  DualitySuiteReport rep;
  rep.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    ot::DualityReport r =
        ot::verify_duality(random_dist(n(rng), 2, rng, false), random_dist(n(rng), 2, rng, false));
    rep.max_gap = std::max(rep.max_gap, r.max_gap);
    if (!r.passed) ++rep.failures;
  }
  return rep;
}

inline double scaling_suite(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(1, 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    ot::DiscreteDist p = random_dist(n(rng), 2, rng, false);
    ot::DiscreteDist q = random_dist(n(rng), 2, rng, false);
    for (double k : {0.5, 2.0, 7.0}) {
      worst = std::max(worst, std::abs(ot::scaling_check(p, q, k).gap));
    }
  }
  return worst;
}

struct BoundingReport {
  std::size_t instances = 0;
  std::size_t with_pairs = 0;  // instances with a real/fake bounding pair
};

// Shared support, unequal masses. Uses the Lipschitz constant of the optimal
// compact-dual values on the support.
inline BoundingReport overlapping_bounding_suite(std::size_t instances, std::uint64_t seed,
                                                 double tol = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(2, 6);
  BoundingReport rep;
  rep.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    ot::DiscreteDist p = random_dist(n(rng), 2, rng, false);
    ot::DiscreteDist q = random_dist(p.size(), 2, rng, false);
    q.atoms = p.atoms;
    ot::DualSolution s = ot::compact_dual(p, q);
    double k = 0.0;
    for (std::size_t a = 0; a < s.f.size(); ++a) {
      for (std::size_t b = a + 1; b < s.f.size(); ++b) {
        k = std::max(k, std::abs(s.f[a] - s.f[b]) /
                            ot::distance(s.points.row_span(a), s.points.row_span(b)));
      }
    }
    if (!(k > 0.0)) continue;
    for (auto [a, b] : ot::bounding_pairs(s.f, s.points, k, tol)) {
      if (std::abs(s.weight[a]) > 0.0 && std::abs(s.weight[b]) > 0.0 &&
          (s.weight[a] > 0.0) != (s.weight[b] > 0.0)) {
        ++rep.with_pairs;
        break;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Width-16 critic and generator with batch 64; about a millisecond per
// iteration.
inline train::TrainConfig small_config() {
  train::TrainConfig c;
  c.critic_cfg.hidden_width = 16;
  c.gen_cfg.hidden_width = 16;
  c.batch_size = 64;
  return c;
}

struct DirectionReport {
  double fraction_aligned = 0.0;  // fakes with cos >= threshold
  double two_atom_min_cosine = 0.0;
};

// Critic fitted with MaxGP against a fixed fake cloud. Fakes are one Gaussian
// at (0, 1), reals two Gaussians at (-1, 0) and (1, 0).
inline DirectionReport gradient_direction(std::uint64_t seed, double threshold = 0.9) {
  train::TrainConfig c;
  c.critic_cfg.hidden_width = 32;
  c.batch_size = 64;
  c.seed = seed;
  c.iterations = 1000;
  c.adam.lr = 1e-3;
  c.fix_generator = true;
  c.data = train::two_gaussians({-1.0, 0.0}, {1.0, 0.0}, 0.1);
  c.fake_data = train::single_gaussian({0.0, 1.0}, 0.3);

  DirectionReport rep;
  train::TrainReport r = train::train(c);
  std::mt19937_64 rng(seed + 1);
  Tensor fakes = train::sample_synthetic(*c.fake_data, 1000, rng);
  FieldSample fs = sample_field(nn::as_field(c.critic_cfg, r.critic_params), fakes);
  std::size_t good = 0;
  for (std::size_t i = 0; i < fakes.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity(), dx = 0.0, dy = 0.0;
    for (const auto& m : c.data.means) {
      double a = m[0] - fakes(i, 0), b = m[1] - fakes(i, 1);
      if (a * a + b * b < best) {
        best = a * a + b * b;
        dx = a;
        dy = b;
      }
    }
    double gx = fs.gradients(i, 0), gy = fs.gradients(i, 1);
    double norm = std::sqrt((gx * gx + gy * gy) * (dx * dx + dy * dy));
    if (norm > 0.0 && (gx * dx + gy * dy) / norm >= threshold) ++good;
  }
  rep.fraction_aligned = static_cast<double>(good) / static_cast<double>(fakes.rows());

  // One real atom, one fake atom.
  train::TrainConfig d = c;
  std::vector<double> real{1.0, 0.0}, fake{-1.0, 0.5};
  d.data = train::discrete_points({real}, {1.0});
  d.fake_data = train::discrete_points({fake}, {1.0});
  train::TrainReport r2 = train::train(d);
  ot::LineCheckReport line =
      ot::line_gradient_check(nn::as_field(d.critic_cfg, r2.critic_params), fake, real, 1.0, 11,
                              1e-3);
  rep.two_atom_min_cosine = line.min_cosine;
  return rep;
}

// Critic trained with real = fake = four equally weighted atoms; returns the
// Lipschitz estimate of the trained critic over the blend region.
inline double nash_k_hat(loss::MetricKind metric, std::uint64_t seed,
                         std::size_t iterations = 5000) {
  train::TrainConfig c = small_config();
  c.metric = metric;
  c.seed = seed;
  c.iterations = iterations;
  c.fix_generator = true;
  c.data = train::discrete_points({{0.0, 0.0}, {1.0, 0.5}, {-0.5, 1.0}, {0.3, -1.0}},
                                  {0.25, 0.25, 0.25, 0.25}, true);
  c.fake_data = c.data;
  train::TrainReport r = train::train(c);
  std::mt19937_64 rng(seed + 17);
  Tensor pts = train::sample_synthetic(c.data, 64, rng);
  return penalty::estimate_k(nn::as_field(c.critic_cfg, r.critic_params), pts, pts, 2000, rng);
}

struct DriftPair {
  double wgan = 0.0;  // linear metric
  double lgan = 0.0;  // logistic metric
};

inline train::TrainConfig drift_config(loss::MetricKind metric, std::uint64_t seed) {
  train::TrainConfig c = small_config();
  c.metric = metric;
  c.seed = seed;
  c.iterations = 1000;
  return c;
}

inline DriftPair drift_pair(std::uint64_t seed) {
  return {train::train(drift_config(loss::MetricKind::kLinear, seed)).drift,
          train::train(drift_config(loss::MetricKind::kLogistic, seed)).drift};
}

// Linear-metric critic on two disjoint Gaussians with the generator frozen.
// Returns the per-iteration k-hat series.
inline std::vector<double> uninformative_k_series(double lambda, std::uint64_t seed,
                                                  std::size_t iterations = 2000) {
  train::TrainConfig c = small_config();
  c.metric = loss::MetricKind::kLinear;
  c.seed = seed;
  c.iterations = iterations;
  c.fix_generator = true;
  c.penalty.lambda = lambda;
  c.data = train::single_gaussian({1.0, 0.0}, 0.1);
  c.fake_data = train::single_gaussian({-1.0, 0.0}, 0.1);
  return train::train(c).k_hat;
}

}  // namespace lipgan::experiments

#endif  // LIPGAN_EXPERIMENTS_HPP
