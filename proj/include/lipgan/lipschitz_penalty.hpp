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

// Gradient-norm regularizers on the blend region between real and fake
// batches:
//
//   gp     lambda * mean((|grad f| - k0)^2)
//   lp     lambda * mean(max(0, |grad f| - k0)^2)
//   maxgp  lambda * max(|grad f|)^2
//
// Graph forms stay differentiable w.r.t. the critic parameters.

#ifndef LIPGAN_LIPSCHITZ_PENALTY_HPP
#define LIPGAN_LIPSCHITZ_PENALTY_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/field.hpp"
#include "lipgan/graph.hpp"

namespace lipgan::penalty {

enum class PenaltyKind { kGp, kLp, kMaxGp };

inline std::string_view penalty_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::kGp: return "gp";
    case PenaltyKind::kLp: return "lp";
    case PenaltyKind::kMaxGp: return "maxgp";
  }
  return "unknown";
}

inline PenaltyKind parse_penalty_kind(std::string_view s) {
  for (PenaltyKind k : {PenaltyKind::kGp, PenaltyKind::kLp, PenaltyKind::kMaxGp}) {
    if (penalty_name(k) == s) return k;
  }
  throw ConfigError("unknown penalty kind '" + std::string(s) + "'");
}

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::kMaxGp;
  double lambda = 0.0;
  double k0 = 1.0;                 // gp / lp target
  std::size_t smax_capacity = 0;   // maxgp only; 0 disables

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("penalty lambda must be a finite value >= 0");
    }
    if (!(k0 >= 0.0) || !std::isfinite(k0)) {
      throw ConfigError("penalty k0 must be a finite value >= 0");
    }
    if (smax_capacity > 0 && kind != PenaltyKind::kMaxGp) {
      throw ConfigError("smax is only meaningful for the maxgp penalty");
    }
  }
};

// ---------------------------------------------------------------------------
// Blend sampling
// ---------------------------------------------------------------------------

// Row i is t[i] * reals[i] + (1 - t[i]) * fakes[i].
inline Tensor sample_blend(const Tensor& reals, const Tensor& fakes, std::span<const double> t) {
  if (reals.rows() != fakes.rows() || reals.cols() != fakes.cols()) {
    throw ContractError("sample_blend: real batch " + reals.shape_string() +
                        " and fake batch " + fakes.shape_string() + " differ");
  }
  if (t.size() != reals.rows()) {
    throw ContractError("sample_blend: need one t per pair");
  }
  Tensor out(reals.rows(), reals.cols());
  for (std::size_t i = 0; i < reals.rows(); ++i) {
    for (std::size_t k = 0; k < reals.cols(); ++k) {
      out(i, k) = t[i] * reals(i, k) + (1.0 - t[i]) * fakes(i, k);
    }
  }
  return out;
}

template <std::uniform_random_bit_generator Rng>
Tensor sample_blend(const Tensor& reals, const Tensor& fakes, Rng& rng,
                    std::vector<double>* t_out = nullptr) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> t(reals.rows());
  for (double& v : t) v = unit(rng);
  Tensor out = sample_blend(reals, fakes, t);
  if (t_out) *t_out = std::move(t);
  return out;
}

// ---------------------------------------------------------------------------
// Gradient norms
// ---------------------------------------------------------------------------

// (n x 1) norms of grad_x f at each row of `points`, built on the same graph.
inline ad::Var grad_norms(const Field& f, ad::Var points) {
  ad::Var y = f(points);
  ad::Var g = points.graph().gradient_graph(ad::sum(y), points);
  return ad::row_norm(g);
}

inline std::vector<double> grad_norms(const Field& f, const Tensor& points) {
  ad::Graph graph;
  ad::Var x = graph.input("points");
  graph.bind(x, points);
  const Tensor& n = graph.eval(grad_norms(f, x));
  return std::vector<double>(n.values().begin(), n.values().end());
}

// ---------------------------------------------------------------------------
// Penalties
// ---------------------------------------------------------------------------

inline ad::Var penalty_maxgp(ad::Var norms, double lambda) {
  return lambda * ad::square(ad::max_all(norms));
}

inline ad::Var penalty_gp(ad::Var norms, double k0, double lambda) {
  return lambda * ad::mean(ad::square(norms - k0));
}

inline ad::Var penalty_lp(ad::Var norms, double k0, double lambda) {
  return lambda * ad::mean(ad::square(ad::relu(norms - k0)));
}

namespace detail {
inline void require_norms(std::span<const double> norms, const char* who) {
  if (norms.empty()) throw ContractError(std::string(who) + ": empty batch of norms");
}
}  // namespace detail

inline double penalty_maxgp(std::span<const double> norms, double lambda) {
  detail::require_norms(norms, "penalty_maxgp");
  double m = *std::max_element(norms.begin(), norms.end());
  return lambda * m * m;
}

inline double penalty_gp(std::span<const double> norms, double k0, double lambda) {
  detail::require_norms(norms, "penalty_gp");
  double s = 0.0;
  for (double n : norms) s += (n - k0) * (n - k0);
  return lambda * s / static_cast<double>(norms.size());
}

inline double penalty_lp(std::span<const double> norms, double k0, double lambda) {
  detail::require_norms(norms, "penalty_lp");
  double s = 0.0;
  for (double n : norms) {
    double e = std::max(0.0, n - k0);
    s += e * e;
  }
  return lambda * s / static_cast<double>(norms.size());
}

inline ad::Var apply_penalty(const PenaltySpec& spec, ad::Var norms) {
  switch (spec.kind) {
    case PenaltyKind::kGp: return penalty_gp(norms, spec.k0, spec.lambda);
    case PenaltyKind::kLp: return penalty_lp(norms, spec.k0, spec.lambda);
    case PenaltyKind::kMaxGp: return penalty_maxgp(norms, spec.lambda);
  }
  throw ContractError("apply_penalty: unknown kind");
}

inline double apply_penalty(const PenaltySpec& spec, std::span<const double> norms) {
  switch (spec.kind) {
    case PenaltyKind::kGp: return penalty_gp(norms, spec.k0, spec.lambda);
    case PenaltyKind::kLp: return penalty_lp(norms, spec.k0, spec.lambda);
    case PenaltyKind::kMaxGp: return penalty_maxgp(norms, spec.lambda);
  }
  throw ContractError("apply_penalty: unknown kind");
}

// ---------------------------------------------------------------------------
// Tracked maxima
// ---------------------------------------------------------------------------

// Fixed-capacity list of the points with the largest observed gradient
// norms, kept in descending order. Earlier entries win ties.
class SMaxList {
 public:
  struct Entry {
    std::vector<double> point;
    double norm = 0.0;
  };

  explicit SMaxList(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void update(std::span<const Entry> candidates) {
    if (capacity_ == 0) return;
    std::vector<Entry> merged = entries_;
    merged.insert(merged.end(), candidates.begin(), candidates.end());
    std::stable_sort(merged.begin(), merged.end(),
                     [](const Entry& a, const Entry& b) { return a.norm > b.norm; });
    if (merged.size() > capacity_) merged.resize(capacity_);
    entries_ = std::move(merged);
  }

  // Rows of `points` paired with `norms`.
  void update(const Tensor& points, std::span<const double> norms) {
    if (points.rows() != norms.size()) {
      throw ContractError("SMaxList::update: points and norms differ in length");
    }
    std::vector<Entry> c;
    c.reserve(norms.size());
    for (std::size_t i = 0; i < norms.size(); ++i) {
      auto row = points.row_span(i);
      c.push_back({std::vector<double>(row.begin(), row.end()), norms[i]});
    }
    update(c);
  }

  // Stored points as an (size x dim) batch.
  Tensor points(std::size_t dim) const {
    Tensor out(entries_.size(), dim);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].point.size() != dim) {
        throw ContractError("SMaxList: stored point has the wrong dimension");
      }
      std::copy(entries_[i].point.begin(), entries_[i].point.end(), out.row_span(i).begin());
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

// Appends the rows of `extra` below `base`.
inline Tensor stack_rows(const Tensor& base, const Tensor& extra) {
  if (extra.rows() == 0) return base;
  if (base.cols() != extra.cols()) throw ContractError("stack_rows: column mismatch");
  Tensor out(base.rows() + extra.rows(), base.cols());
  std::copy(base.values().begin(), base.values().end(), out.values().begin());
  std::copy(extra.values().begin(), extra.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(base.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Lipschitz estimate
// ---------------------------------------------------------------------------

// Largest gradient norm over `n_samples` blend points. Each sample pairs a
// uniformly drawn real row with a uniformly drawn fake row.
template <std::uniform_random_bit_generator Rng>
double estimate_k(const Field& f, const Tensor& reals, const Tensor& fakes,
                  std::size_t n_samples, Rng& rng) {
  if (n_samples < 1) throw ContractError("estimate_k: n_samples must be >= 1");
  if (reals.rows() == 0 || fakes.rows() == 0) throw ContractError("estimate_k: empty batch");
  if (reals.cols() != fakes.cols()) throw ContractError("estimate_k: dimension mismatch");
  constexpr std::size_t kChunk = 1024;
  std::uniform_int_distribution<std::size_t> pick_r(0, reals.rows() - 1);
  std::uniform_int_distribution<std::size_t> pick_f(0, fakes.rows() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best = 0.0;
  for (std::size_t done = 0; done < n_samples;) {
    std::size_t n = std::min(kChunk, n_samples - done);
    Tensor pts(n, reals.cols());
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = pick_r(rng), b = pick_f(rng);
      double t = unit(rng);
      for (std::size_t k = 0; k < reals.cols(); ++k) {
        pts(i, k) = t * reals(a, k) + (1.0 - t) * fakes(b, k);
      }
    }
    for (double v : grad_norms(f, pts)) best = std::max(best, v);
    done += n;
  }
  return best;
}

}  // namespace lipgan::penalty

#endif  // LIPGAN_LIPSCHITZ_PENALTY_HPP
