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

#ifndef LIPGAN_MLP_HPP
#define LIPGAN_MLP_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipgan/field.hpp"
#include "lipgan/graph.hpp"

namespace lipgan::nn {

enum class Activation { kRelu, kSelu };

inline std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "selu";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "selu") return Activation::kSelu;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

// Fully connected network: `depth` hidden layers of `hidden_width` units.
struct MlpConfig {
  std::size_t input_dim = 2;
  std::size_t hidden_width = 64;
  std::size_t depth = 2;
  std::size_t output_dim = 1;
  Activation activation = Activation::kRelu;

  void validate() const {
    if (input_dim == 0 || hidden_width == 0 || depth == 0 || output_dim == 0) {
      throw ConfigError("mlp: input_dim, hidden_width, depth and output_dim must be positive");
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = input_dim * hidden_width + hidden_width;
    n += (depth - 1) * (hidden_width * hidden_width + hidden_width);
    n += hidden_width * output_dim + output_dim;
    return n;
  }

  bool operator==(const MlpConfig&) const = default;
};

// Weights then bias for each layer: W0, b0, W1, b1, ..., W_out, b_out.
using Parameters = std::vector<Tensor>;

// Glorot-uniform weights, zero biases.
inline Parameters init_mlp(const MlpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Parameters params;
  auto layer = [&](std::size_t fan_in, std::size_t fan_out) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w(fan_in, fan_out);
    for (double& v : w.values()) v = u(rng);
    params.push_back(std::move(w));
    params.emplace_back(1, fan_out, 0.0);
  };
  layer(cfg.input_dim, cfg.hidden_width);
  for (std::size_t i = 1; i < cfg.depth; ++i) layer(cfg.hidden_width, cfg.hidden_width);
  layer(cfg.hidden_width, cfg.output_dim);
  return params;
}

inline std::size_t count_parameters(const Parameters& params) {
  std::size_t n = 0;
  for (const Tensor& t : params) n += t.size();
  return n;
}

inline ad::Var activate(Activation a, ad::Var z) {
  if (a == Activation::kRelu) return ad::relu(z);
  // selu(z) = s * (relu(z) + alpha * (exp(min(z, 0)) - 1)), min(z, 0) = -relu(-z)
  constexpr double kAlpha = 1.6732632423543772;
  constexpr double kScale = 1.0507009873554805;
  ad::Var negative_part = ad::exp(-ad::relu(-z)) - 1.0;
  return kScale * (ad::relu(z) + kAlpha * negative_part);
}

// Builds the forward pass for a batch `x` (n x input_dim) -> (n x output_dim).
inline ad::Var mlp_forward(const MlpConfig& cfg, std::span<const ad::Var> params, ad::Var x) {
  if (params.size() != 2 * (cfg.depth + 1)) {
    throw ContractError("mlp: expected " + std::to_string(2 * (cfg.depth + 1)) +
                        " parameter tensors, got " + std::to_string(params.size()));
  }
  ad::Var h = x;
  for (std::size_t layer = 0; layer <= cfg.depth; ++layer) {
    h = ad::add_row(ad::matmul(h, params[2 * layer]), params[2 * layer + 1]);
    if (layer < cfg.depth) h = activate(cfg.activation, h);
  }
  return h;
}

// One input node per parameter tensor, named <prefix>W<i> / <prefix>b<i>.
inline std::vector<ad::Var> parameter_inputs(ad::Graph& graph, const MlpConfig& cfg,
                                             std::string_view prefix) {
  std::vector<ad::Var> vars;
  for (std::size_t layer = 0; layer <= cfg.depth; ++layer) {
    vars.push_back(graph.input(std::string(prefix) + "W" + std::to_string(layer)));
    vars.push_back(graph.input(std::string(prefix) + "b" + std::to_string(layer)));
  }
  return vars;
}

inline void bind_parameters(ad::Graph& graph, std::span<const ad::Var> vars,
                            const Parameters& params) {
  if (vars.size() != params.size()) throw ContractError("mlp: parameter count mismatch");
  for (std::size_t i = 0; i < vars.size(); ++i) graph.bind(vars[i], params[i]);
}

// The network with frozen parameters, as a field over its first output.
inline Field as_field(const MlpConfig& cfg, const Parameters& params) {
  return [cfg, params](ad::Var x) {
    std::vector<ad::Var> consts;
    for (const Tensor& p : params) consts.push_back(x.graph().constant(p));
    return mlp_forward(cfg, consts, x);
  };
}

}  // namespace lipgan::nn

#endif  // LIPGAN_MLP_HPP
