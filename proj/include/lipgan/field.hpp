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

#ifndef LIPGAN_FIELD_HPP
#define LIPGAN_FIELD_HPP

#include <functional>

#include "lipgan/graph.hpp"

namespace lipgan {

// A scalar function of points, expressed as a graph builder: given a batch
// node (n x d) it returns the (n x 1) values. Critics, linear test
// functions and hand-written fields all share this form.
using Field = std::function<ad::Var(ad::Var)>;

struct FieldSample {
  Tensor values;     // n x 1
  Tensor gradients;  // n x d, row i is grad_x f at point i
};

// Values and input gradients of `f` at every row of `points`.
inline FieldSample sample_field(const Field& f, const Tensor& points) {
  ad::Graph graph;
  ad::Var x = graph.input("x");
  graph.bind(x, points);
  ad::Var y = f(x);
  ad::Var g = graph.gradient_graph(ad::sum(y), x);
  std::vector<ad::Var> outs{y, g};
  graph.evaluate(outs);
  return {graph.value(y), graph.value(g)};
}

// Linear field f(x) = <w, x> + c.
inline Field linear_field(std::vector<double> w, double c = 0.0) {
  return [w = std::move(w), c](ad::Var x) {
    ad::Var wv = x.graph().constant(Tensor::column(w));
    ad::Var y = ad::matmul(x, wv);
    return c == 0.0 ? y : y + c;
  };
}

}  // namespace lipgan

#endif  // LIPGAN_FIELD_HPP
