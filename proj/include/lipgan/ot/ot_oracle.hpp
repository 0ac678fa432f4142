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

// Exact first-order Wasserstein computations on small discrete measures.
//
// P is the real side and Q the fake side throughout. Three linear programs
// compute the same number on valid inputs:
//
//   primal   min sum pi_ij d(x_i, y_j) over couplings pi
//   kr       max E_P[f] - E_Q[f], |f(u) - f(v)| <= d(u, v) on all support pairs
//   compact  same objective, f(x) - f(y) <= d(x, y) only for x in S_P, y in S_Q
//
// Distances are Euclidean.

#ifndef LIPGAN_OT_OT_ORACLE_HPP
#define LIPGAN_OT_OT_ORACLE_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/field.hpp"
#include "lipgan/format.hpp"
#include "lipgan/ot/simplex.hpp"
#include "lipgan/tensor.hpp"

namespace lipgan::ot {

inline constexpr std::size_t kMaxAtomsPerSide = 64;

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

struct DiscreteDist {
  Tensor atoms;                // n x dim
  std::vector<double> masses;  // n, positive, summing to 1

  std::size_t size() const { return masses.size(); }
  std::size_t dim() const { return atoms.cols(); }
  std::span<const double> atom(std::size_t i) const { return atoms.row_span(i); }

  void validate() const {
    if (masses.empty()) throw ContractError("distribution: no atoms");
    if (atoms.rows() != masses.size()) {
      throw ContractError("distribution: " + std::to_string(atoms.rows()) + " atoms but " +
                          std::to_string(masses.size()) + " masses");
    }
    if (atoms.cols() == 0) throw ContractError("distribution: atoms have dimension 0");
    if (!atoms.all_finite()) throw ContractError("distribution: non-finite coordinate");
    double total = 0.0;
    for (double m : masses) {
      if (!(m > 0.0) || !std::isfinite(m)) {
        throw ContractError("distribution: masses must be positive and finite");
      }
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ContractError("distribution: masses sum to " + std::to_string(total) + ", not 1");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = i + 1; j < size(); ++j) {
        if (distance(atom(i), atom(j)) == 0.0) {
          throw ContractError("distribution: atoms " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide");
        }
      }
    }
  }
};

inline DiscreteDist uniform_dist(Tensor atoms) {
  std::vector<double> m(atoms.rows(), 1.0 / static_cast<double>(atoms.rows()));
  return {std::move(atoms), std::move(m)};
}

inline DiscreteDist point_mass(std::vector<double> x) {
  return {Tensor::row(x), {1.0}};
}

// The lines {0} x [0, 1] (fake) and {offset} x [0, 1] (real) discretized
// at m evenly spaced heights.
inline std::pair<DiscreteDist, DiscreteDist> discretized_lines(std::size_t m,
                                                               double offset = 1.0) {
  if (m < 1) throw ContractError("discretized_lines: need at least one atom");
  Tensor real(m, 2), fake(m, 2);
  for (std::size_t i = 0; i < m; ++i) {
    double z = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
    real(i, 0) = offset;
    real(i, 1) = z;
    fake(i, 0) = 0.0;
    fake(i, 1) = z;
  }
  return {uniform_dist(std::move(real)), uniform_dist(std::move(fake))};
}

namespace detail {
inline void check_pair(const DiscreteDist& p, const DiscreteDist& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw ContractError("distributions have different dimensions");
  if (p.size() > kMaxAtomsPerSide || q.size() > kMaxAtomsPerSide) {
    throw CapacityError("oracle capacity is " + std::to_string(kMaxAtomsPerSide) +
                        " atoms per side, got " + std::to_string(p.size()) + " and " +
                        std::to_string(q.size()));
  }
}

}  // namespace detail

// CSV with one row per atom: coordinates then mass. Blank lines and lines
// starting with '#' are skipped, as is a leading non-numeric header row.
inline DiscreteDist parse_dist_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      auto b = cell.find_first_not_of(" \t");
      auto e = cell.find_last_not_of(" \t");
      std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw ConfigError("distribution csv line " + std::to_string(lineno) +
                        ": non-numeric cell");
    }
    if (vals.size() < 2) {
      throw ConfigError("distribution csv line " + std::to_string(lineno) +
                        ": need at least one coordinate and a mass");
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw ConfigError("distribution csv line " + std::to_string(lineno) +
                        ": inconsistent column count");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ConfigError("distribution csv: no atoms");
  const std::size_t dim = rows.front().size() - 1;
  DiscreteDist d{Tensor(rows.size(), dim), {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) d.atoms(i, k) = rows[i][k];
    d.masses.push_back(rows[i][dim]);
  }
  try {
    d.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("distribution csv: ") + e.what());
  }
  return d;
}

inline DiscreteDist read_dist_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open distribution file '" + path + "'");
  return parse_dist_csv(in);
}

inline void write_dist_csv(std::ostream& out, const DiscreteDist& d) {
  for (std::size_t k = 0; k < d.dim(); ++k) out << "x" << k << ",";
  out << "mass\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d.dim(); ++k) out << format_double(d.atoms(i, k)) << ",";
    out << format_double(d.masses[i]) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Primal
// ---------------------------------------------------------------------------

struct TransportPlan {
  Tensor flow;  // |P| x |Q|
  double cost = 0.0;
};

inline TransportPlan w1_exact(const DiscreteDist& p, const DiscreteDist& q) {
  detail::check_pair(p, q);
  const std::size_t m = p.size(), n = q.size(), nv = m * n;
  // Variables pi_ij at index i * n + j. Rows: sum_j pi_ij <= p_i and
  // -sum_i pi_ij <= -q_j; equal totals make both bind.
  std::vector<double> a((m + n) * nv, 0.0), b(m + n), c(nv);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = p.masses[i];
    for (std::size_t j = 0; j < n; ++j) {
      a[i * nv + i * n + j] = 1.0;
      a[(m + j) * nv + i * n + j] = -1.0;
      c[i * n + j] = -distance(p.atom(i), q.atom(j));
    }
  }
  for (std::size_t j = 0; j < n; ++j) b[m + j] = -q.masses[j];
  LpResult r = solve_lp(a, b, c);
  if (r.status != LpStatus::kOptimal) throw NumericError("w1_exact: transport LP not solved");
  TransportPlan plan{Tensor(m, n), 0.0};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      plan.flow(i, j) = r.x[i * n + j];
      plan.cost += r.x[i * n + j] * distance(p.atom(i), q.atom(j));
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Duals
// ---------------------------------------------------------------------------

enum class ConstraintMode { kKr, kCompact };

struct DualSolution {
  Tensor points;               // union support, one row per distinct point
  std::vector<double> f;       // critic value per point
  std::vector<double> weight;  // P mass minus Q mass per point
  std::vector<char> in_p, in_q;
  double objective = 0.0;
  ConstraintMode mode = ConstraintMode::kKr;
};

// Largest violation of the mode's Lipschitz constraints (bound k * d).
inline double max_violation(const DualSolution& s, ConstraintMode mode, double k = 1.0) {
  double worst = 0.0;
  const std::size_t n = s.f.size();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      if (mode == ConstraintMode::kCompact && !(s.in_p[u] && s.in_q[v])) continue;
      double d = distance(s.points.row_span(u), s.points.row_span(v));
      worst = std::max(worst, s.f[u] - s.f[v] - k * d);
    }
  }
  return worst;
}

inline double dual_objective(const DualSolution& s) {
  double o = 0.0;
  for (std::size_t u = 0; u < s.f.size(); ++u) o += s.weight[u] * s.f[u];
  return o;
}

namespace detail {

inline DualSolution union_support(const DiscreteDist& p, const DiscreteDist& q) {
  DualSolution s;
  std::vector<std::vector<double>> pts;
  auto add = [&](std::span<const double> x, double w, bool from_p) {
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (std::equal(pts[u].begin(), pts[u].end(), x.begin())) {
        s.weight[u] += w;
        (from_p ? s.in_p : s.in_q)[u] = 1;
        return;
      }
    }
    pts.emplace_back(x.begin(), x.end());
    s.weight.push_back(w);
    s.in_p.push_back(from_p ? 1 : 0);
    s.in_q.push_back(from_p ? 0 : 1);
  };
  for (std::size_t i = 0; i < p.size(); ++i) add(p.atom(i), p.masses[i], true);
  for (std::size_t j = 0; j < q.size(); ++j) add(q.atom(j), -q.masses[j], false);
  s.points = Tensor(pts.size(), p.dim());
  for (std::size_t u = 0; u < pts.size(); ++u) {
    std::copy(pts[u].begin(), pts[u].end(), s.points.row_span(u).begin());
  }
  s.f.assign(pts.size(), 0.0);
  return s;
}

// Maximizes sum_u weight_u f_u under f_u - f_v <= k d(u, v) for the pairs
// the mode selects. f_0 is pinned to 0 and the rest are split f = f+ - f-.
inline DualSolution solve_dual(const DiscreteDist& p, const DiscreteDist& q,
                               ConstraintMode mode, double k) {
  check_pair(p, q);
  DualSolution s = union_support(p, q);
  s.mode = mode;
  const std::size_t n = s.f.size();
  if (n == 1) return s;
  const std::size_t nv = 2 * (n - 1);
  auto col = [](std::size_t u) { return 2 * (u - 1); };  // f+ column; f- is next

  std::vector<double> a, b;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      if (mode == ConstraintMode::kCompact && !(s.in_p[u] && s.in_q[v])) continue;
      std::vector<double> row(nv, 0.0);
      if (u > 0) {
        row[col(u)] += 1.0;
        row[col(u) + 1] -= 1.0;
      }
      if (v > 0) {
        row[col(v)] -= 1.0;
        row[col(v) + 1] += 1.0;
      }
      a.insert(a.end(), row.begin(), row.end());
      b.push_back(k * distance(s.points.row_span(u), s.points.row_span(v)));
    }
  }
  std::vector<double> c(nv);
  for (std::size_t u = 1; u < n; ++u) {
    c[col(u)] = s.weight[u];
    c[col(u) + 1] = -s.weight[u];
  }
  LpResult r = solve_lp(a, b, c);
  if (r.status == LpStatus::kUnbounded) {
    throw UnboundedError("dual LP is unbounded: the constraint graph does not tie every "
                         "support point together");
  }
  if (r.status != LpStatus::kOptimal) throw NumericError("dual LP not solved");
  for (std::size_t u = 1; u < n; ++u) s.f[u] = r.x[col(u)] - r.x[col(u) + 1];
  s.objective = dual_objective(s);
  return s;
}

}  // namespace detail

inline DualSolution kr_dual(const DiscreteDist& p, const DiscreteDist& q) {
  return detail::solve_dual(p, q, ConstraintMode::kKr, 1.0);
}

inline DualSolution compact_dual(const DiscreteDist& p, const DiscreteDist& q) {
  return detail::solve_dual(p, q, ConstraintMode::kCompact, 1.0);
}

struct DualityReport {
  double primal = 0.0;
  double kr = 0.0;
  double compact = 0.0;
  double max_gap = 0.0;
  bool passed = false;
};

inline DualityReport verify_duality(const DiscreteDist& p, const DiscreteDist& q,
                                    double tol = 1e-6) {
  DualityReport r;
  r.primal = w1_exact(p, q).cost;
  r.kr = kr_dual(p, q).objective;
  r.compact = compact_dual(p, q).objective;
  r.max_gap = std::max({std::abs(r.primal - r.kr), std::abs(r.primal - r.compact),
                        std::abs(r.kr - r.compact)});
  r.passed = r.max_gap <= tol;
  return r;
}

struct ScalingReport {
  double value_at_k = 0.0;
  double k_times_value_at_1 = 0.0;
  double gap = 0.0;
};

// KR value with Lipschitz bound k against k times the bound-1 value.
inline ScalingReport scaling_check(const DiscreteDist& p, const DiscreteDist& q, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw ContractError("scaling_check: k must be > 0");
  ScalingReport r;
  r.value_at_k = detail::solve_dual(p, q, ConstraintMode::kKr, k).objective;
  r.k_times_value_at_1 = k * detail::solve_dual(p, q, ConstraintMode::kKr, 1.0).objective;
  r.gap = r.value_at_k - r.k_times_value_at_1;
  return r;
}

// ---------------------------------------------------------------------------
// Closed-form optimal discriminators
// ---------------------------------------------------------------------------

enum class FStarKind { kVanilla, kLsgan, kFisher };

struct FStarParams {
  double alpha = 0.0;  // lsgan fake target
  double beta = 1.0;   // lsgan real target
  double mu = 1.0;     // fisher reference density at x
  double f_mu = 1.0;   // fisher normalizer
};

// Vanilla returns +inf when only p_r is positive and -inf when only p_g is.
inline double closed_form_fstar(FStarKind kind, double p_r, double p_g,
                                const FStarParams& prm = {}) {
  if (!(p_r >= 0.0) || !(p_g >= 0.0) || !std::isfinite(p_r) || !std::isfinite(p_g)) {
    throw ContractError("closed_form_fstar: densities must be finite and >= 0");
  }
  if (p_r == 0.0 && p_g == 0.0) throw ContractError("closed_form_fstar: both densities zero");
  switch (kind) {
    case FStarKind::kVanilla:
      if (p_g == 0.0) return std::numeric_limits<double>::infinity();
      if (p_r == 0.0) return -std::numeric_limits<double>::infinity();
      return std::log(p_r / p_g);
    case FStarKind::kLsgan:
      return (prm.alpha * p_g + prm.beta * p_r) / (p_r + p_g);
    case FStarKind::kFisher:
      if (!(prm.mu > 0.0) || !(prm.f_mu > 0.0)) {
        throw ContractError("closed_form_fstar: fisher needs mu > 0 and F_mu > 0");
      }
      return (p_r - p_g) / (prm.f_mu * prm.mu);
  }
  throw ContractError("closed_form_fstar: unknown kind");
}

// ---------------------------------------------------------------------------
// Bounding relationships
// ---------------------------------------------------------------------------

// Ordered pairs (i, j), i != j, whose value difference attains slope k.
inline std::vector<std::pair<std::size_t, std::size_t>> bounding_pairs(
    std::span<const double> f, const Tensor& points, double k, double tol = 1e-3) {
  if (!(k > 0.0)) throw ContractError("bounding_pairs: k must be > 0");
  if (f.size() != points.rows()) throw ContractError("bounding_pairs: size mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (i == j) continue;
      double d = distance(points.row_span(i), points.row_span(j));
      if (d == 0.0) continue;
      if (std::abs(std::abs(f[j] - f[i]) - k * d) <= tol * k * d) out.emplace_back(i, j);
    }
  }
  return out;
}

struct LineCheckReport {
  double max_cosine_deviation = 0.0;  // max of 1 - cos
  double max_slope_deviation = 0.0;   // max of | |grad f| - k |
  double min_cosine = 1.0;
  bool passed = false;
};

// Gradients at m points x_t = t x + (1 - t) y, t = 0 .. 1, against the
// direction (y - x) / |y - x| and magnitude k.
inline LineCheckReport line_gradient_check(const Field& critic, std::span<const double> x,
                                           std::span<const double> y, double k,
                                           std::size_t m, double tol) {
  if (x.size() != y.size() || x.empty()) throw ContractError("line_gradient_check: dims");
  if (m < 2) throw ContractError("line_gradient_check: need m >= 2");
  const double len = distance(x, y);
  if (len == 0.0) throw ContractError("line_gradient_check: x and y coincide");
  const std::size_t d = x.size();
  Tensor pts(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(m - 1);
    for (std::size_t c = 0; c < d; ++c) pts(i, c) = t * x[c] + (1.0 - t) * y[c];
  }
  FieldSample s = sample_field(critic, pts);
  LineCheckReport r;
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0, norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += s.gradients(i, c) * (y[c] - x[c]) / len;
      norm += s.gradients(i, c) * s.gradients(i, c);
    }
    norm = std::sqrt(norm);
    double cosine = norm == 0.0 ? 0.0 : dot / norm;
    r.min_cosine = std::min(r.min_cosine, cosine);
    r.max_cosine_deviation = std::max(r.max_cosine_deviation, 1.0 - cosine);
    r.max_slope_deviation = std::max(r.max_slope_deviation, std::abs(norm - k));
  }
  r.passed = r.max_cosine_deviation <= tol && r.max_slope_deviation <= tol * k;
  return r;
}

}  // namespace lipgan::ot

#endif  // LIPGAN_OT_OT_ORACLE_HPP
