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

// Shared helpers and independent oracles for the test suites. Nothing here
// calls into the code paths it is used to check.

#ifndef LIPGAN_TESTS_TEST_UTIL_HPP
#define LIPGAN_TESTS_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "lipgan/graph.hpp"
#include "lipgan/mlp.hpp"

namespace testing_util {

using lipgan::Tensor;

struct MlpProblem {
  std::unique_ptr<lipgan::ad::Graph> graph;
  lipgan::ad::Var x;
  std::vector<lipgan::ad::Var> params;
};

// Random parameters (biases included) and a random input batch, all bound.
inline MlpProblem random_mlp_problem(const lipgan::nn::MlpConfig& cfg, std::uint64_t seed,
                                     std::size_t batch) {
  MlpProblem p;
  p.graph = std::make_unique<lipgan::ad::Graph>();
  p.x = p.graph->input("x");
  p.params = lipgan::nn::parameter_inputs(*p.graph, cfg, "");
  lipgan::nn::Parameters values = lipgan::nn::init_mlp(cfg, seed);
  std::mt19937_64 rng(seed * 7919 + 1);
  std::normal_distribution<double> n01;
  for (std::size_t i = 1; i < values.size(); i += 2) {
    for (double& v : values[i].values()) v = 0.3 * n01(rng);
  }
  lipgan::nn::bind_parameters(*p.graph, p.params, values);
  Tensor x(batch, cfg.input_dim);
  for (double& v : x.values()) v = n01(rng);
  p.graph->bind(p.x, x);
  return p;
}

// Straight-line forward pass of a one-hidden-layer network, averaged over
// the batch. Written with plain loops, independent of the graph machinery.
inline double mlp_mean_output(const lipgan::nn::Parameters& params, const Tensor& x,
                              bool selu) {
  const Tensor& w0 = params[0];
  const Tensor& b0 = params[1];
  const Tensor& w1 = params[2];
  const Tensor& b1 = params[3];
  double total = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    double out = b1[0];
    for (std::size_t h = 0; h < w0.cols(); ++h) {
      double z = b0[h];
      for (std::size_t i = 0; i < x.cols(); ++i) z += x(n, i) * w0(i, h);
      double a = z > 0 ? z : (selu ? 1.6732632423543772 * (std::exp(z) - 1.0) : 0.0);
      if (selu) a *= 1.0507009873554805;
      out += a * w1(h, 0);
    }
    total += out;
  }
  return total / static_cast<double>(x.rows());
}

// Minimum-cost perfect matching by enumerating permutations. Returns the
// mean matched distance, i.e. W1 between two uniform n-atom measures.
inline double assignment_oracle(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        double d = a(i, k) - b(perm[i], k);
        s += d * d;
      }
      cost += std::sqrt(s);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

inline double population_sd(const std::vector<double>& v) {
  double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace testing_util

#endif  // LIPGAN_TESTS_TEST_UTIL_HPP
