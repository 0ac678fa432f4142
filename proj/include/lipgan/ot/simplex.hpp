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

// Dense dictionary simplex for small linear programs
//
//   maximize c^T x  subject to  A x <= b,  x >= 0.
//
// Bland's rule picks entering and leaving variables, so degenerate
// problems terminate. Negative right-hand sides go through an auxiliary
// first phase. Arithmetic is double precision with a fixed pivot tolerance.

#ifndef LIPGAN_OT_SIMPLEX_HPP
#define LIPGAN_OT_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lipgan/error.hpp"

namespace lipgan::ot {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;     // primal values
  std::vector<double> dual;  // one multiplier per constraint row
  std::size_t pivots = 0;
};

struct LpOptions {
  double pivot_tol = 1e-11;       // coefficients smaller than this are zero
  double feasibility_tol = 1e-9;  // accepted first-phase infeasibility
  std::size_t max_pivots = 2'000'000;
};

namespace detail {

// x_basis[i] = D(i, 0) + sum_j D(i, j + 1) * x_nonbasic[j]
// z          = D(m, 0) + sum_j D(m, j + 1) * x_nonbasic[j]
class Dictionary {
 public:
  Dictionary(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), d_((rows + 1) * (cols + 1), 0.0),
        basis_(rows), nonbasis_(cols) {}

  double& at(std::size_t r, std::size_t c) { return d_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return d_[r * (cols_ + 1) + c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<std::size_t>& nonbasis() { return nonbasis_; }

  // Exchanges basic row r with nonbasic column j.
  void pivot(std::size_t r, std::size_t j) {
    const std::size_t w = cols_ + 1;
    double* row = &d_[r * w];
    const double a = row[j + 1];
    // Solve row r for the entering variable.
    row[j + 1] = -1.0;
    for (std::size_t c = 0; c < w; ++c) row[c] /= -a;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      double* other = &d_[i * w];
      const double f = other[j + 1];
      if (f == 0.0) continue;
      other[j + 1] = 0.0;
      for (std::size_t c = 0; c < w; ++c) other[c] += f * row[c];
    }
    std::swap(basis_[r], nonbasis_[j]);
  }

  // Runs Bland's rule on the objective row. Returns false when unbounded.
  bool optimize(const LpOptions& opt, std::size_t& pivots) {
    while (true) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (at(rows_, j + 1) > opt.pivot_tol &&
            (enter == cols_ || nonbasis_[j] < nonbasis_[enter])) {
          enter = j;
        }
      }
      if (enter == cols_) return true;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        double a = at(i, enter + 1);
        if (a >= -opt.pivot_tol) continue;
        double ratio = std::max(at(i, 0), 0.0) / -a;
        // Ties within rounding go to the smallest basic label.
        const double tie = 1e-12 * (1.0 + std::abs(best));
        if (leave == rows_ || ratio < best - tie) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + tie && basis_[i] < basis_[leave]) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
      if (++pivots > opt.max_pivots) throw NumericError("simplex: pivot limit exceeded");
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> d_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nonbasis_;
};

}  // namespace detail

// `a` is row-major with rows = b.size() and cols = c.size().
inline LpResult solve_lp(const std::vector<double>& a, const std::vector<double>& b,
                         const std::vector<double>& c, const LpOptions& opt = {}) {
  const std::size_t m = b.size();
  const std::size_t n = c.size();
  if (a.size() != m * n) throw ContractError("solve_lp: constraint matrix has the wrong size");

  bool needs_phase1 = false;
  for (double v : b) needs_phase1 = needs_phase1 || v < 0.0;

  // Variable labels: 0..n-1 original, n..n+m-1 slacks, n+m auxiliary.
  const std::size_t aux = n + m;
  const std::size_t cols = needs_phase1 ? n + 1 : n;
  detail::Dictionary dict(m, cols);
  for (std::size_t i = 0; i < m; ++i) {
    dict.basis()[i] = n + i;
    dict.at(i, 0) = b[i];
    for (std::size_t j = 0; j < n; ++j) dict.at(i, j + 1) = -a[i * n + j];
    if (needs_phase1) dict.at(i, n + 1) = 1.0;
  }
  for (std::size_t j = 0; j < n; ++j) dict.nonbasis()[j] = j;

  LpResult res;
  if (needs_phase1) {
    dict.nonbasis()[n] = aux;
    dict.at(m, n + 1) = -1.0;  // maximize -x_aux
    std::size_t worst = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (dict.at(i, 0) < dict.at(worst, 0)) worst = i;
    }
    dict.pivot(worst, n);
    ++res.pivots;
    dict.optimize(opt, res.pivots);
    if (dict.at(m, 0) < -opt.feasibility_tol) {
      res.status = LpStatus::kInfeasible;
      return res;
    }
    // Drive the auxiliary variable out of the basis if it stayed there.
    for (std::size_t i = 0; i < m; ++i) {
      if (dict.basis()[i] != aux) continue;
      std::size_t best = cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (std::abs(dict.at(i, j + 1)) > opt.pivot_tol &&
            (best == cols || std::abs(dict.at(i, j + 1)) > std::abs(dict.at(i, best + 1)))) {
          best = j;
        }
      }
      if (best != cols) {
        dict.pivot(i, best);
        ++res.pivots;
      }
    }
    // The auxiliary column is now fixed at zero; zero it out of every row.
    for (std::size_t j = 0; j < cols; ++j) {
      if (dict.nonbasis()[j] != aux) continue;
      for (std::size_t i = 0; i <= m; ++i) dict.at(i, j + 1) = 0.0;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (dict.at(i, 0) < 0.0) dict.at(i, 0) = 0.0;
    }
  }

  // Express the real objective in terms of the current nonbasic variables.
  for (std::size_t j = 0; j <= cols; ++j) dict.at(m, j) = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    std::size_t label = dict.nonbasis()[j];
    if (label < n) dict.at(m, j + 1) += c[label];
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t label = dict.basis()[i];
    if (label >= n || c[label] == 0.0) continue;
    for (std::size_t j = 0; j <= cols; ++j) dict.at(m, j) += c[label] * dict.at(i, j);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (dict.nonbasis()[j] == aux) dict.at(m, j + 1) = 0.0;
  }

  if (!dict.optimize(opt, res.pivots)) {
    res.status = LpStatus::kUnbounded;
    return res;
  }

  res.status = LpStatus::kOptimal;
  res.objective = dict.at(m, 0);
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t label = dict.basis()[i];
    if (label < n) res.x[label] = std::max(dict.at(i, 0), 0.0);
  }
  res.dual.assign(m, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    std::size_t label = dict.nonbasis()[j];
    if (label >= n && label < n + m) res.dual[label - n] = -dict.at(m, j + 1);
  }
  return res;
}

}  // namespace lipgan::ot

#endif  // LIPGAN_OT_SIMPLEX_HPP
