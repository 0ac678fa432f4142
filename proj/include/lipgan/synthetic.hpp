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

// Toy data sources for the 2-D experiments.
//
//   parallel_lines        (offset, z) with z uniform on [z_lo, z_hi]
//   two_density_regions   uniform on one of two boxes, box A with mass mass_a
//   gaussian_mixture      isotropic components (mean, stddev, weight)
//   discrete_points       weighted atoms; optionally stratified batches

#ifndef LIPGAN_SYNTHETIC_HPP
#define LIPGAN_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/tensor.hpp"

namespace lipgan::train {

enum class DataKind { kParallelLines, kTwoDensityRegions, kGaussianMixture, kDiscretePoints };

inline std::string_view data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::kParallelLines: return "parallel_lines";
    case DataKind::kTwoDensityRegions: return "two_density_regions";
    case DataKind::kGaussianMixture: return "gaussian_mixture";
    case DataKind::kDiscretePoints: return "discrete_points";
  }
  return "unknown";
}

inline DataKind parse_data_kind(std::string_view s) {
  for (DataKind k : {DataKind::kParallelLines, DataKind::kTwoDensityRegions,
                     DataKind::kGaussianMixture, DataKind::kDiscretePoints}) {
    if (data_kind_name(k) == s) return k;
  }
  throw ConfigError("unknown data kind '" + std::string(s) + "'");
}

struct Box {
  double x_lo = -1.0, x_hi = 1.0;
  double y_lo = -1.0, y_hi = 1.0;
};

struct SyntheticSpec {
  DataKind kind = DataKind::kGaussianMixture;

  double line_offset = 1.0;
  double z_lo = 0.0, z_hi = 1.0;

  Box region_a{0.0, 1.0, 0.0, 1.0};
  Box region_b{0.5, 1.5, 0.0, 1.0};
  double mass_a = 0.5;

  std::vector<std::vector<double>> means;
  std::vector<double> stddevs;
  std::vector<double> weights;

  std::vector<std::vector<double>> atoms;
  std::vector<double> masses;
  bool stratified = false;

  std::size_t dim() const {
    switch (kind) {
      case DataKind::kParallelLines:
      case DataKind::kTwoDensityRegions: return 2;
      case DataKind::kGaussianMixture: return means.empty() ? 0 : means.front().size();
      case DataKind::kDiscretePoints: return atoms.empty() ? 0 : atoms.front().size();
    }
    return 0;
  }

  void validate() const;
};

namespace detail {
inline void check_weights(const std::vector<double>& w, std::size_t n, const char* what) {
  if (w.size() != n) throw ConfigError(std::string(what) + ": count does not match");
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(what) + " must be finite and non-negative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(std::string(what) + " must sum to 1 (got " + std::to_string(total) + ")");
  }
}

inline void check_points(const std::vector<std::vector<double>>& pts, const char* what) {
  if (pts.empty()) throw ConfigError(std::string(what) + ": at least one point required");
  for (const auto& p : pts) {
    if (p.empty() || p.size() != pts.front().size()) {
      throw ConfigError(std::string(what) + ": points must share a non-zero dimension");
    }
    for (double v : p) {
      if (!std::isfinite(v)) throw ConfigError(std::string(what) + ": non-finite coordinate");
    }
  }
}

inline void check_box(const Box& b, const char* what) {
  if (!(b.x_lo < b.x_hi) || !(b.y_lo < b.y_hi)) {
    throw ConfigError(std::string(what) + ": box bounds must satisfy lo < hi");
  }
}
}  // namespace detail

inline void SyntheticSpec::validate() const {
  switch (kind) {
    case DataKind::kParallelLines:
      if (!std::isfinite(line_offset) || !(z_lo <= z_hi)) {
        throw ConfigError("parallel_lines: need a finite offset and z_lo <= z_hi");
      }
      return;
    case DataKind::kTwoDensityRegions:
      detail::check_box(region_a, "two_density_regions region_a");
      detail::check_box(region_b, "two_density_regions region_b");
      if (!(mass_a >= 0.0 && mass_a <= 1.0)) {
        throw ConfigError("two_density_regions: mass_a must lie in [0, 1]");
      }
      return;
    case DataKind::kGaussianMixture:
      detail::check_points(means, "gaussian_mixture means");
      detail::check_weights(weights, means.size(), "gaussian_mixture weights");
      if (stddevs.size() != means.size()) {
        throw ConfigError("gaussian_mixture: one stddev per component required");
      }
      for (double s : stddevs) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
          throw ConfigError("gaussian_mixture: stddev must be finite and >= 0");
        }
      }
      return;
    case DataKind::kDiscretePoints:
      detail::check_points(atoms, "discrete_points atoms");
      detail::check_weights(masses, atoms.size(), "discrete_points masses");
      return;
  }
}

// Two isotropic Gaussians of equal weight.
inline SyntheticSpec two_gaussians(std::vector<double> a, std::vector<double> b, double sd) {
  SyntheticSpec s;
  s.kind = DataKind::kGaussianMixture;
  s.means = {std::move(a), std::move(b)};
  s.stddevs = {sd, sd};
  s.weights = {0.5, 0.5};
  return s;
}

inline SyntheticSpec single_gaussian(std::vector<double> mean, double sd) {
  SyntheticSpec s;
  s.kind = DataKind::kGaussianMixture;
  s.means = {std::move(mean)};
  s.stddevs = {sd};
  s.weights = {1.0};
  return s;
}

inline SyntheticSpec parallel_lines(double offset, double z_lo = 0.0, double z_hi = 1.0) {
  SyntheticSpec s;
  s.kind = DataKind::kParallelLines;
  s.line_offset = offset;
  s.z_lo = z_lo;
  s.z_hi = z_hi;
  return s;
}

inline SyntheticSpec discrete_points(std::vector<std::vector<double>> atoms,
                                     std::vector<double> masses, bool stratified = false) {
  SyntheticSpec s;
  s.kind = DataKind::kDiscretePoints;
  s.atoms = std::move(atoms);
  s.masses = std::move(masses);
  s.stratified = stratified;
  return s;
}

// Largest-remainder allocation of n draws to the given masses.
inline std::vector<std::size_t> stratified_counts(const std::vector<double>& masses,
                                                  std::size_t n) {
  std::vector<std::size_t> counts(masses.size());
  std::vector<double> rem(masses.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    double exact = masses[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(counts[i]);
    used += counts[i];
  }
  std::vector<std::size_t> order(masses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) counts[order[k % order.size()]] += 1;
  return counts;
}

template <class Rng>
Tensor sample_synthetic(const SyntheticSpec& spec, std::size_t n, Rng& rng) {
  if (n < 1) throw ContractError("sample_synthetic: n must be >= 1");
  spec.validate();
  const std::size_t d = spec.dim();
  Tensor out(n, d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> n01;

  switch (spec.kind) {
    case DataKind::kParallelLines:
      for (std::size_t i = 0; i < n; ++i) {
        out(i, 0) = spec.line_offset;
        out(i, 1) = spec.z_lo + (spec.z_hi - spec.z_lo) * unit(rng);
      }
      break;
    case DataKind::kTwoDensityRegions:
      for (std::size_t i = 0; i < n; ++i) {
        const Box& b = unit(rng) < spec.mass_a ? spec.region_a : spec.region_b;
        out(i, 0) = b.x_lo + (b.x_hi - b.x_lo) * unit(rng);
        out(i, 1) = b.y_lo + (b.y_hi - b.y_lo) * unit(rng);
      }
      break;
    case DataKind::kGaussianMixture: {
      std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = pick(rng);
        for (std::size_t k = 0; k < d; ++k) {
          out(i, k) = spec.means[c][k] + spec.stddevs[c] * n01(rng);
        }
      }
      break;
    }
    case DataKind::kDiscretePoints: {
      std::vector<std::size_t> which;
      if (spec.stratified) {
        std::vector<std::size_t> counts = stratified_counts(spec.masses, n);
        for (std::size_t a = 0; a < counts.size(); ++a) which.insert(which.end(), counts[a], a);
        std::shuffle(which.begin(), which.end(), rng);
      } else {
        std::discrete_distribution<std::size_t> pick(spec.masses.begin(), spec.masses.end());
        for (std::size_t i = 0; i < n; ++i) which.push_back(pick(rng));
      }
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(spec.atoms[which[i]].begin(), spec.atoms[which[i]].end(),
                  out.row_span(i).begin());
      }
      break;
    }
  }
  return out;
}

// Centres of the distribution's modes: component means or atoms. Empty for
// the continuous line and region kinds.
inline std::vector<std::vector<double>> mode_centres(const SyntheticSpec& spec) {
  if (spec.kind == DataKind::kGaussianMixture) return spec.means;
  if (spec.kind == DataKind::kDiscretePoints) return spec.atoms;
  return {};
}

}  // namespace lipgan::train

#endif  // LIPGAN_SYNTHETIC_HPP
