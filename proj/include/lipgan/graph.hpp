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

// graph.hpp - reverse-mode automatic differentiation over dense matrices.
//
// A Graph is an append-only list of operation nodes. Nodes only reference
// earlier nodes, so creation order is a topological order. Inputs are
// placeholders bound to tensors before evaluation; shapes are checked when a
// node is evaluated, which lets one graph serve batches of any size.
//
// Differentiation is symbolic: gradients() appends the backward pass to the
// same graph as ordinary nodes. The result can be evaluated, or
// differentiated again, which is how penalties on ||grad_x f|| obtain their
// parameter gradients.

#ifndef LIPGAN_GRAPH_HPP
#define LIPGAN_GRAPH_HPP

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/tensor.hpp"

namespace lipgan::ad {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  kSeed,       // 1x1 one; parent is the differentiated output (shape only)
  kZerosLike,  // zeros shaped like the parent
  kAdd,
  kSub,
  kMul,
  kDiv,
  kSafeDiv,  // a / b, with 0 wherever b == 0
  kNeg,
  kScale,
  kAddScalar,
  kMatMul,
  kTranspose,
  kAddRow,  // (n x m) + (1 x m) broadcast over rows
  kMulCol,  // (n x m) * (n x 1) broadcast over columns
  kSum,
  kMean,
  kSumRows,  // (n x m) -> (1 x m)
  kSumCols,  // (n x m) -> (n x 1)
  kBroadcastLike,
  kSpreadMean,  // s / size(like), broadcast to like's shape
  kBroadcastRowsLike,
  kBroadcastColsLike,
  kRowNorm,
  kMax,
  kArgmaxMask,
  kRelu,
  kStep,
  kTanh,
  kSigmoid,
  kSoftplus,
  kExp,
  kLog,
  kSqrt,
  kSquare,
  kMap,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kSeed: return "seed";
    case Op::kZerosLike: return "zeros_like";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kSafeDiv: return "safe_div";
    case Op::kNeg: return "neg";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kAddRow: return "add_row";
    case Op::kMulCol: return "mul_col";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSumRows: return "sum_rows";
    case Op::kSumCols: return "sum_cols";
    case Op::kBroadcastLike: return "broadcast_like";
    case Op::kSpreadMean: return "spread_mean";
    case Op::kBroadcastRowsLike: return "broadcast_rows_like";
    case Op::kBroadcastColsLike: return "broadcast_cols_like";
    case Op::kRowNorm: return "row_norm";
    case Op::kMax: return "max";
    case Op::kArgmaxMask: return "argmax_mask";
    case Op::kRelu: return "relu";
    case Op::kStep: return "step";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSoftplus: return "softplus";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kSquare: return "square";
    case Op::kMap: return "map";
  }
  return "unknown";
}

// User-supplied elementwise function. `derivative` may be left empty, in
// which case the node can be evaluated but not differentiated.
struct ElementFn {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

class Graph;

// Lightweight handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  NodeId id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  bool operator==(const Var&) const = default;

 private:
  friend class Graph;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  NodeId id_ = kNoNode;
};

struct Node {
  Op op = Op::kConstant;
  std::array<NodeId, 2> parents{kNoNode, kNoNode};
  double attr = 0.0;
  std::string name;
  std::shared_ptr<const ElementFn> fn;
  Tensor value;
  bool bound = false;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  Var input(std::string name) {
    Node n;
    n.op = Op::kInput;
    n.name = std::move(name);
    return push(std::move(n));
  }

  Var constant(Tensor value) {
    if (!value.all_finite()) throw NumericError("constant: non-finite value");
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n));
  }
  Var constant(double v) { return constant(Tensor::scalar(v)); }

  void bind(Var in, Tensor value) {
    check_owner(in);
    Node& n = nodes_[in.id()];
    if (n.op != Op::kInput) {
      throw ContractError("bind: node " + std::to_string(in.id()) + " (" +
                          std::string(op_name(n.op)) + ") is not an input");
    }
    if (!value.all_finite()) {
      throw NumericError("bind: non-finite value for input '" + n.name + "'");
    }
    n.value = std::move(value);
    n.bound = true;
  }

  // Evaluates every node the outputs depend on. Nothing is reused from a
  // previous call, so rebinding an input always takes effect.
  void evaluate(std::span<const Var> outputs) {
    std::vector<char> needed(nodes_.size(), 0);
    NodeId top = 0;
    for (Var v : outputs) {
      check_owner(v);
      needed[v.id()] = 1;
      top = std::max(top, v.id());
    }
    if (outputs.empty()) return;
    for (NodeId id = top + 1; id-- > 0;) {
      if (!needed[id]) continue;
      for (NodeId p : nodes_[id].parents) {
        if (p != kNoNode) needed[p] = 1;
      }
    }
    for (NodeId id = 0; id <= top; ++id) {
      if (needed[id]) compute(id);
    }
  }

  const Tensor& eval(Var output) {
    evaluate(std::span<const Var>(&output, 1));
    return nodes_[output.id()].value;
  }

  // Value from the most recent evaluation that covered this node.
  const Tensor& value(Var v) const {
    check_owner(v);
    return nodes_[v.id()].value;
  }

  // Appends the reverse pass of `output` and returns one gradient node per
  // entry of `wrt`, each shaped like its variable. Results are cached, so
  // asking twice for the same gradients does not grow the graph.
  std::vector<Var> gradients(Var output, std::span<const Var> wrt);

  // Gradient of `output` with respect to a single node, as a graph node.
  Var gradient_graph(Var output, Var wrt) {
    return gradients(output, std::span<const Var>(&wrt, 1)).front();
  }

  // Numeric gradients: builds (or reuses) the gradient nodes and evaluates
  // them with the current bindings.
  std::vector<Tensor> gradient(Var output, std::span<const Var> wrt) {
    std::vector<Var> g = gradients(output, wrt);
    evaluate(g);
    std::vector<Tensor> out;
    out.reserve(g.size());
    for (Var v : g) out.push_back(nodes_[v.id()].value);
    return out;
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  // Node construction. Public so that free operator functions can use it;
  // callers normally go through those functions instead.
  Var make(Op op, Var a, Var b = Var(), double attr = 0.0) {
    check_owner(a);
    Node n;
    n.op = op;
    n.parents[0] = a.id();
    if (b.valid()) {
      check_owner(b);
      n.parents[1] = b.id();
    }
    n.attr = attr;
    return push(std::move(n));
  }

  Var make_map(Var a, std::shared_ptr<const ElementFn> fn) {
    check_owner(a);
    Node n;
    n.op = Op::kMap;
    n.parents[0] = a.id();
    n.fn = std::move(fn);
    n.name = n.fn->name;
    return push(std::move(n));
  }

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  void check_owner(Var v) const {
    if (v.graph_ != this || v.id_ >= nodes_.size()) {
      throw ContractError("graph: handle does not belong to this graph");
    }
  }

  Var handle(NodeId id) { return Var(this, id); }

  [[noreturn]] void fail_shape(NodeId id, const std::string& what) const {
    const Node& n = nodes_[id];
    std::string label = "node " + std::to_string(id) + " (" + std::string(op_name(n.op));
    if (!n.name.empty()) label += " '" + n.name + "'";
    throw ShapeError(label + "): " + what);
  }

  [[noreturn]] void fail_domain(NodeId id, const std::string& what) const {
    throw DomainError("node " + std::to_string(id) + " (" +
                      std::string(op_name(nodes_[id].op)) + "): " + what);
  }

  void compute(NodeId id);
  void backprop(NodeId id, Var upstream, const std::vector<char>& relevant,
                std::vector<NodeId>& adjoint);

  std::vector<Node> nodes_;
  std::map<std::vector<NodeId>, std::vector<NodeId>> grad_cache_;
};

// ---------------------------------------------------------------------------
// Operation constructors
// ---------------------------------------------------------------------------

inline Var add(Var a, Var b) { return a.graph().make(Op::kAdd, a, b); }
inline Var sub(Var a, Var b) { return a.graph().make(Op::kSub, a, b); }
inline Var mul(Var a, Var b) { return a.graph().make(Op::kMul, a, b); }
inline Var div(Var a, Var b) { return a.graph().make(Op::kDiv, a, b); }
inline Var safe_div(Var a, Var b) { return a.graph().make(Op::kSafeDiv, a, b); }
inline Var neg(Var a) { return a.graph().make(Op::kNeg, a); }
inline Var scale(Var a, double c) { return a.graph().make(Op::kScale, a, Var(), c); }
inline Var add_scalar(Var a, double c) {
  return a.graph().make(Op::kAddScalar, a, Var(), c);
}
inline Var matmul(Var a, Var b) { return a.graph().make(Op::kMatMul, a, b); }
inline Var transpose(Var a) { return a.graph().make(Op::kTranspose, a); }
inline Var add_row(Var a, Var row) { return a.graph().make(Op::kAddRow, a, row); }
inline Var mul_col(Var a, Var col) { return a.graph().make(Op::kMulCol, a, col); }
inline Var sum(Var a) { return a.graph().make(Op::kSum, a); }
inline Var mean(Var a) { return a.graph().make(Op::kMean, a); }
inline Var sum_rows(Var a) { return a.graph().make(Op::kSumRows, a); }
inline Var sum_cols(Var a) { return a.graph().make(Op::kSumCols, a); }
inline Var broadcast_like(Var s, Var like) {
  return s.graph().make(Op::kBroadcastLike, s, like);
}
inline Var spread_mean(Var s, Var like) {
  return s.graph().make(Op::kSpreadMean, s, like);
}
inline Var broadcast_rows_like(Var r, Var like) {
  return r.graph().make(Op::kBroadcastRowsLike, r, like);
}
inline Var broadcast_cols_like(Var c, Var like) {
  return c.graph().make(Op::kBroadcastColsLike, c, like);
}
inline Var row_norm(Var a) { return a.graph().make(Op::kRowNorm, a); }
// Maximum over every element; differentiates through the first maximizer.
inline Var max_all(Var a) { return a.graph().make(Op::kMax, a); }
inline Var argmax_mask(Var a) { return a.graph().make(Op::kArgmaxMask, a); }
inline Var relu(Var a) { return a.graph().make(Op::kRelu, a); }
inline Var step(Var a) { return a.graph().make(Op::kStep, a); }
inline Var tanh(Var a) { return a.graph().make(Op::kTanh, a); }
inline Var sigmoid(Var a) { return a.graph().make(Op::kSigmoid, a); }
inline Var softplus(Var a) { return a.graph().make(Op::kSoftplus, a); }
inline Var exp(Var a) { return a.graph().make(Op::kExp, a); }
inline Var log(Var a) { return a.graph().make(Op::kLog, a); }
inline Var sqrt(Var a) { return a.graph().make(Op::kSqrt, a); }
inline Var square(Var a) { return a.graph().make(Op::kSquare, a); }
inline Var zeros_like(Var a) { return a.graph().make(Op::kZerosLike, a); }
inline Var map(Var a, ElementFn fn) {
  return a.graph().make_map(a, std::make_shared<const ElementFn>(std::move(fn)));
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, Var a) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, Var a) { return add_scalar(neg(a), c); }

// ---------------------------------------------------------------------------
// Forward kernels
// ---------------------------------------------------------------------------

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename F>
void unary(const Tensor& a, Tensor& out, F f) {
  out.resize(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
}

template <typename F>
void binary(const Tensor& a, const Tensor& b, Tensor& out, F f) {
  out.resize(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
}

inline std::size_t first_argmax(const Tensor& a) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

}  // namespace detail

inline void Graph::compute(NodeId id) {
  Node& n = nodes_[id];
  auto arg = [&](int k) -> const Tensor& { return nodes_[n.parents[k]].value; };
  Tensor& out = n.value;

  auto same_shape = [&] {
    if (arg(0).shape() != arg(1).shape()) {
      fail_shape(id, "operands " + arg(0).shape_string() + " and " +
                         arg(1).shape_string() + " differ");
    }
  };

  switch (n.op) {
    case Op::kInput:
      if (!n.bound) {
        throw ContractError("node " + std::to_string(id) + " (input '" + n.name +
                            "'): not bound");
      }
      return;
    case Op::kConstant:
      return;
    case Op::kSeed:
      if (arg(0).shape() != Tensor::Shape{1, 1}) {
        throw ContractError("gradient: output node " + std::to_string(n.parents[0]) +
                            " is " + arg(0).shape_string() + ", not scalar");
      }
      out = Tensor::scalar(1.0);
      return;
    case Op::kZerosLike:
      out.resize(arg(0).rows(), arg(0).cols());
      std::fill(out.values().begin(), out.values().end(), 0.0);
      return;
    case Op::kAdd:
      same_shape();
      detail::binary(arg(0), arg(1), out, [](double x, double y) { return x + y; });
      break;
    case Op::kSub:
      same_shape();
      detail::binary(arg(0), arg(1), out, [](double x, double y) { return x - y; });
      break;
    case Op::kMul:
      same_shape();
      detail::binary(arg(0), arg(1), out, [](double x, double y) { return x * y; });
      break;
    case Op::kDiv: {
      same_shape();
      for (double v : arg(1).values()) {
        if (v == 0.0) fail_domain(id, "division by zero");
      }
      detail::binary(arg(0), arg(1), out, [](double x, double y) { return x / y; });
      break;
    }
    case Op::kSafeDiv:
      same_shape();
      detail::binary(arg(0), arg(1), out,
                     [](double x, double y) { return y == 0.0 ? 0.0 : x / y; });
      break;
    case Op::kNeg:
      detail::unary(arg(0), out, [](double x) { return -x; });
      break;
    case Op::kScale: {
      double c = n.attr;
      detail::unary(arg(0), out, [c](double x) { return c * x; });
      break;
    }
    case Op::kAddScalar: {
      double c = n.attr;
      detail::unary(arg(0), out, [c](double x) { return x + c; });
      break;
    }
    case Op::kMatMul: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      if (a.cols() != b.rows()) {
        fail_shape(id, "inner dimensions of " + a.shape_string() + " * " +
                           b.shape_string() + " differ");
      }
      out.resize(a.rows(), b.cols());
      Eigen::Map<const detail::RowMatrix> ma(a.data(), a.rows(), a.cols());
      Eigen::Map<const detail::RowMatrix> mb(b.data(), b.rows(), b.cols());
      Eigen::Map<detail::RowMatrix> mo(out.data(), a.rows(), b.cols());
      mo.noalias() = ma * mb;
      break;
    }
    case Op::kTranspose: {
      const Tensor& a = arg(0);
      out.resize(a.cols(), a.rows());
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
      break;
    }
    case Op::kAddRow: {
      const Tensor& a = arg(0);
      const Tensor& r = arg(1);
      if (r.rows() != 1 || r.cols() != a.cols()) {
        fail_shape(id, "row " + r.shape_string() + " does not broadcast over " +
                           a.shape_string());
      }
      out.resize(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + r[j];
      break;
    }
    case Op::kMulCol: {
      const Tensor& a = arg(0);
      const Tensor& c = arg(1);
      if (c.cols() != 1 || c.rows() != a.rows()) {
        fail_shape(id, "column " + c.shape_string() + " does not broadcast over " +
                           a.shape_string());
      }
      out.resize(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * c[i];
      break;
    }
    case Op::kSum: {
      double s = 0.0;
      for (double v : arg(0).values()) s += v;
      out = Tensor::scalar(s);
      break;
    }
    case Op::kMean: {
      const Tensor& a = arg(0);
      if (a.empty()) fail_shape(id, "mean of an empty tensor");
      double s = 0.0;
      for (double v : a.values()) s += v;
      out = Tensor::scalar(s / static_cast<double>(a.size()));
      break;
    }
    case Op::kSumRows: {
      const Tensor& a = arg(0);
      out.resize(1, a.cols());
      std::fill(out.values().begin(), out.values().end(), 0.0);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j);
      break;
    }
    case Op::kSumCols: {
      const Tensor& a = arg(0);
      out.resize(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
        out[i] = s;
      }
      break;
    }
    case Op::kBroadcastLike:
    case Op::kSpreadMean: {
      const Tensor& s = arg(0);
      const Tensor& like = arg(1);
      if (s.shape() != Tensor::Shape{1, 1}) fail_shape(id, "expects a 1x1 operand");
      double v = s[0];
      if (n.op == Op::kSpreadMean) {
        if (like.empty()) fail_shape(id, "mean over an empty tensor");
        v /= static_cast<double>(like.size());
      }
      out.resize(like.rows(), like.cols());
      std::fill(out.values().begin(), out.values().end(), v);
      break;
    }
    case Op::kBroadcastRowsLike: {
      const Tensor& r = arg(0);
      const Tensor& like = arg(1);
      if (r.rows() != 1 || r.cols() != like.cols()) {
        fail_shape(id, "row " + r.shape_string() + " does not broadcast to " +
                           like.shape_string());
      }
      out.resize(like.rows(), like.cols());
      for (std::size_t i = 0; i < like.rows(); ++i)
        for (std::size_t j = 0; j < like.cols(); ++j) out(i, j) = r[j];
      break;
    }
    case Op::kBroadcastColsLike: {
      const Tensor& c = arg(0);
      const Tensor& like = arg(1);
      if (c.cols() != 1 || c.rows() != like.rows()) {
        fail_shape(id, "column " + c.shape_string() + " does not broadcast to " +
                           like.shape_string());
      }
      out.resize(like.rows(), like.cols());
      for (std::size_t i = 0; i < like.rows(); ++i)
        for (std::size_t j = 0; j < like.cols(); ++j) out(i, j) = c[i];
      break;
    }
    case Op::kRowNorm: {
      const Tensor& a = arg(0);
      out.resize(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
        out[i] = std::sqrt(s);
      }
      break;
    }
    case Op::kMax: {
      const Tensor& a = arg(0);
      if (a.empty()) fail_shape(id, "max of an empty tensor");
      out = Tensor::scalar(a[detail::first_argmax(a)]);
      break;
    }
    case Op::kArgmaxMask: {
      const Tensor& a = arg(0);
      if (a.empty()) fail_shape(id, "argmax of an empty tensor");
      out.resize(a.rows(), a.cols());
      std::fill(out.values().begin(), out.values().end(), 0.0);
      out[detail::first_argmax(a)] = 1.0;
      break;
    }
    case Op::kRelu:
      detail::unary(arg(0), out, [](double x) { return x > 0.0 ? x : 0.0; });
      break;
    case Op::kStep:
      detail::unary(arg(0), out, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
      break;
    case Op::kTanh:
      detail::unary(arg(0), out, [](double x) { return std::tanh(x); });
      break;
    case Op::kSigmoid:
      detail::unary(arg(0), out, detail::stable_sigmoid);
      break;
    case Op::kSoftplus:
      detail::unary(arg(0), out, detail::stable_softplus);
      break;
    case Op::kExp:
      detail::unary(arg(0), out, [](double x) { return std::exp(x); });
      break;
    case Op::kLog:
      for (double v : arg(0).values()) {
        if (!(v > 0.0)) fail_domain(id, "log of non-positive argument " + std::to_string(v));
      }
      detail::unary(arg(0), out, [](double x) { return std::log(x); });
      break;
    case Op::kSqrt:
      for (double v : arg(0).values()) {
        if (v < 0.0) fail_domain(id, "sqrt of negative argument " + std::to_string(v));
      }
      detail::unary(arg(0), out, [](double x) { return std::sqrt(x); });
      break;
    case Op::kSquare:
      detail::unary(arg(0), out, [](double x) { return x * x; });
      break;
    case Op::kMap:
      detail::unary(arg(0), out, n.fn->value);
      break;
  }
  if (!out.all_finite()) {
    throw NumericError("node " + std::to_string(id) + " (" + std::string(op_name(n.op)) +
                       "): produced a non-finite value");
  }
}

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

inline std::vector<Var> Graph::gradients(Var output, std::span<const Var> wrt) {
  check_owner(output);
  std::vector<NodeId> key{output.id()};
  for (Var w : wrt) {
    check_owner(w);
    key.push_back(w.id());
  }
  if (auto it = grad_cache_.find(key); it != grad_cache_.end()) {
    std::vector<Var> cached;
    for (NodeId id : it->second) cached.push_back(handle(id));
    return cached;
  }

  const NodeId out_id = output.id();
  const std::size_t count = out_id + 1;

  // Nodes on some path wrt -> output.
  std::vector<char> from_wrt(count, 0);
  for (Var w : wrt) {
    if (w.id() <= out_id) from_wrt[w.id()] = 1;
  }
  for (NodeId id = 0; id < count; ++id) {
    for (NodeId p : nodes_[id].parents) {
      if (p != kNoNode && from_wrt[p]) from_wrt[id] = 1;
    }
  }
  std::vector<char> to_output(count, 0);
  to_output[out_id] = 1;
  for (NodeId id = count; id-- > 0;) {
    if (!to_output[id]) continue;
    for (NodeId p : nodes_[id].parents) {
      if (p != kNoNode) to_output[p] = 1;
    }
  }
  std::vector<char> relevant(count, 0);
  for (NodeId id = 0; id < count; ++id) relevant[id] = from_wrt[id] && to_output[id];

  std::vector<NodeId> adjoint(count, kNoNode);
  if (relevant[out_id]) adjoint[out_id] = make(Op::kSeed, output).id();

  for (NodeId id = count; id-- > 0;) {
    if (!relevant[id] || adjoint[id] == kNoNode) continue;
    backprop(id, handle(adjoint[id]), relevant, adjoint);
  }

  std::vector<Var> result;
  std::vector<NodeId> ids;
  for (Var w : wrt) {
    Var g = (w.id() < count && adjoint[w.id()] != kNoNode) ? handle(adjoint[w.id()])
                                                          : zeros_like(w);
    result.push_back(g);
    ids.push_back(g.id());
  }
  grad_cache_.emplace(std::move(key), std::move(ids));
  return result;
}

inline void Graph::backprop(NodeId id, Var g, const std::vector<char>& relevant,
                            std::vector<NodeId>& adjoint) {
  // Copy what we need: make() may reallocate nodes_.
  const Op op = nodes_[id].op;
  const double attr = nodes_[id].attr;
  const NodeId pa = nodes_[id].parents[0];
  const NodeId pb = nodes_[id].parents[1];
  const std::shared_ptr<const ElementFn> fn = nodes_[id].fn;
  const Var a = pa != kNoNode ? handle(pa) : Var();
  const Var b = pb != kNoNode ? handle(pb) : Var();
  const Var y = handle(id);

  auto wants = [&](NodeId p) { return p != kNoNode && relevant[p]; };
  auto accumulate = [&](NodeId p, Var contribution) {
    adjoint[p] = adjoint[p] == kNoNode ? contribution.id()
                                       : add(handle(adjoint[p]), contribution).id();
  };

  switch (op) {
    case Op::kInput:
    case Op::kConstant:
    case Op::kSeed:
    case Op::kZerosLike:
    case Op::kStep:
    case Op::kArgmaxMask:
      // Piecewise constant or leaf: no contribution.
      return;
    case Op::kAdd:
      if (wants(pa)) accumulate(pa, g);
      if (wants(pb)) accumulate(pb, g);
      return;
    case Op::kSub:
      if (wants(pa)) accumulate(pa, g);
      if (wants(pb)) accumulate(pb, neg(g));
      return;
    case Op::kMul:
      if (wants(pa)) accumulate(pa, mul(g, b));
      if (wants(pb)) accumulate(pb, mul(g, a));
      return;
    case Op::kDiv:
      if (wants(pa)) accumulate(pa, div(g, b));
      if (wants(pb)) accumulate(pb, neg(div(mul(g, y), b)));
      return;
    case Op::kSafeDiv:
      if (wants(pa)) accumulate(pa, safe_div(g, b));
      if (wants(pb)) accumulate(pb, neg(safe_div(mul(g, y), b)));
      return;
    case Op::kNeg:
      accumulate(pa, neg(g));
      return;
    case Op::kScale:
      accumulate(pa, scale(g, attr));
      return;
    case Op::kAddScalar:
      accumulate(pa, g);
      return;
    case Op::kMatMul:
      if (wants(pa)) accumulate(pa, matmul(g, transpose(b)));
      if (wants(pb)) accumulate(pb, matmul(transpose(a), g));
      return;
    case Op::kTranspose:
      accumulate(pa, transpose(g));
      return;
    case Op::kAddRow:
      if (wants(pa)) accumulate(pa, g);
      if (wants(pb)) accumulate(pb, sum_rows(g));
      return;
    case Op::kMulCol:
      if (wants(pa)) accumulate(pa, mul_col(g, b));
      if (wants(pb)) accumulate(pb, sum_cols(mul(g, a)));
      return;
    case Op::kSum:
      accumulate(pa, broadcast_like(g, a));
      return;
    case Op::kMean:
      accumulate(pa, spread_mean(g, a));
      return;
    case Op::kSumRows:
      accumulate(pa, broadcast_rows_like(g, a));
      return;
    case Op::kSumCols:
      accumulate(pa, broadcast_cols_like(g, a));
      return;
    case Op::kBroadcastLike:
      if (wants(pa)) accumulate(pa, sum(g));
      return;
    case Op::kSpreadMean:
      if (wants(pa)) accumulate(pa, mean(g));
      return;
    case Op::kBroadcastRowsLike:
      if (wants(pa)) accumulate(pa, sum_rows(g));
      return;
    case Op::kBroadcastColsLike:
      if (wants(pa)) accumulate(pa, sum_cols(g));
      return;
    case Op::kRowNorm:
      // d||a_i|| / d a_i = a_i / ||a_i||, taken as 0 at the origin.
      accumulate(pa, mul_col(a, safe_div(g, y)));
      return;
    case Op::kMax:
      accumulate(pa, mul(argmax_mask(a), broadcast_like(g, a)));
      return;
    case Op::kRelu:
      accumulate(pa, mul(g, step(a)));
      return;
    case Op::kTanh:
      accumulate(pa, mul(g, 1.0 - square(y)));
      return;
    case Op::kSigmoid:
      accumulate(pa, mul(g, mul(y, 1.0 - y)));
      return;
    case Op::kSoftplus:
      accumulate(pa, mul(g, sigmoid(a)));
      return;
    case Op::kExp:
      accumulate(pa, mul(g, y));
      return;
    case Op::kLog:
      accumulate(pa, div(g, a));
      return;
    case Op::kSqrt:
      accumulate(pa, div(scale(g, 0.5), y));
      return;
    case Op::kSquare:
      accumulate(pa, mul(g, scale(a, 2.0)));
      return;
    case Op::kMap: {
      if (!fn->derivative) {
        throw UnsupportedOpError("no derivative registered for operation 'map:" +
                                 fn->name + "'");
      }
      accumulate(pa, mul(g, map(a, ElementFn{fn->name + "'", fn->derivative, {}})));
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Free-function interface
// ---------------------------------------------------------------------------

using Bindings = std::vector<std::pair<Var, Tensor>>;

// Binds the given inputs and returns the value of `output`.
inline Tensor eval(Graph& graph, const Bindings& bindings, Var output) {
  for (const auto& [in, value] : bindings) graph.bind(in, value);
  return graph.eval(output);
}

}  // namespace lipgan::ad

#endif  // LIPGAN_GRAPH_HPP
