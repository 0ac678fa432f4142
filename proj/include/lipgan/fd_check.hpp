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

#ifndef LIPGAN_FD_CHECK_HPP
#define LIPGAN_FD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lipgan/graph.hpp"

namespace lipgan::ad {

// Gradients smaller than this are compared in absolute terms.
inline constexpr double kFdRelativeFloor = 1e-6;

struct FdReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> relative_errors;
  double max_relative_error = 0.0;
  double mean_relative_error = 0.0;
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFdRelativeFloor});
}

// Compares reverse-mode gradients of a scalar `output` against central
// differences, perturbing every coordinate of each bound input in `wrt`.
// Coordinates are reported flattened in `wrt` order.
inline FdReport fd_check(Graph& graph, Var output, std::span<const Var> wrt, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("fd_check: epsilon must be positive");
  for (Var w : wrt) {
    if (graph.node(w.id()).op != Op::kInput) {
      throw ContractError("fd_check: wrt nodes must be bound inputs");
    }
  }
  std::vector<Tensor> grads = graph.gradient(output, wrt);

  FdReport report;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    Tensor base = graph.value(wrt[k]);
    for (std::size_t i = 0; i < base.size(); ++i) {
      Tensor probe = base;
      probe[i] = base[i] + epsilon;
      graph.bind(wrt[k], probe);
      double up = graph.eval(output).item();
      probe[i] = base[i] - epsilon;
      graph.bind(wrt[k], probe);
      double down = graph.eval(output).item();
      double numeric = (up - down) / (2.0 * epsilon);
      double analytic = grads[k][i];
      report.analytic.push_back(analytic);
      report.numeric.push_back(numeric);
      report.relative_errors.push_back(relative_error(analytic, numeric));
    }
    graph.bind(wrt[k], base);
  }
  if (!report.relative_errors.empty()) {
    double total = 0.0;
    for (double e : report.relative_errors) {
      report.max_relative_error = std::max(report.max_relative_error, e);
      total += e;
    }
    report.mean_relative_error = total / static_cast<double>(report.relative_errors.size());
  }
  return report;
}

}  // namespace lipgan::ad

#endif  // LIPGAN_FD_CHECK_HPP
