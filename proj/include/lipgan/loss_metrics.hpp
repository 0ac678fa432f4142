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

// Discriminator loss pairs (phi on fake scores, varphi on real scores) and
// the generator loss psi(x) = -x.
//
// The critic minimizes  E_fake[phi(f)] + E_real[varphi(f)]  (+ penalty).
// Every supported pair satisfies varphi(x) = phi(-x).

#ifndef LIPGAN_LOSS_METRICS_HPP
#define LIPGAN_LOSS_METRICS_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lipgan/error.hpp"
#include "lipgan/graph.hpp"

namespace lipgan::loss {

enum class MetricKind { kLinear, kLogistic, kSqrtSoftplus, kExponential, kQuadratic, kHinge };

inline constexpr MetricKind kAllMetricKinds[] = {
    MetricKind::kLinear,      MetricKind::kLogistic,  MetricKind::kSqrtSoftplus,
    MetricKind::kExponential, MetricKind::kQuadratic, MetricKind::kHinge};

inline std::string_view metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::kLinear: return "linear";
    case MetricKind::kLogistic: return "logistic";
    case MetricKind::kSqrtSoftplus: return "sqrt_softplus";
    case MetricKind::kExponential: return "exp";
    case MetricKind::kQuadratic: return "quadratic";
    case MetricKind::kHinge: return "hinge";
  }
  return "unknown";
}

inline MetricKind parse_metric_kind(std::string_view s) {
  for (MetricKind k : kAllMetricKinds) {
    if (metric_name(k) == s) return k;
  }
  throw ConfigError("unknown metric kind '" + std::string(s) + "'");
}

inline bool takes_alpha(MetricKind k) {
  return k == MetricKind::kQuadratic || k == MetricKind::kHinge;
}

class LossMetric {
 public:
  MetricKind kind() const { return kind_; }
  // Offset parameter of the quadratic and hinge pairs.
  std::optional<double> alpha() const { return alpha_; }
  std::string_view name() const { return metric_name(kind_); }

  double phi(double x) const { return value(x); }
  double dphi(double x) const { return first(x); }
  double d2phi(double x) const { return second(x); }
  double varphi(double x) const { return value(-x); }
  double dvarphi(double x) const { return -first(-x); }
  double d2varphi(double x) const { return second(-x); }
  static double psi(double x) { return -x; }
  static double dpsi(double) { return -1.0; }

  ad::Var phi(ad::Var v) const { return graph_value(v); }
  ad::Var varphi(ad::Var v) const { return graph_value(-v); }
  static ad::Var psi(ad::Var v) { return -v; }

 private:
  friend LossMetric make_metric(MetricKind kind, std::optional<double> alpha);
  LossMetric(MetricKind kind, std::optional<double> alpha) : kind_(kind), alpha_(alpha) {}

  double a() const { return alpha_.value_or(0.0); }

  double value(double x) const {
    switch (kind_) {
      case MetricKind::kLinear: return x;
      case MetricKind::kLogistic:  // -log(sigmoid(-x)) = log(1 + e^x)
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      case MetricKind::kSqrtSoftplus: return x + std::sqrt(x * x + 1.0);
      case MetricKind::kExponential: return std::exp(x);
      case MetricKind::kQuadratic: return (x + a()) * (x + a());
      case MetricKind::kHinge: return x + a() > 0.0 ? x + a() : 0.0;
    }
    return 0.0;
  }

  double first(double x) const {
    switch (kind_) {
      case MetricKind::kLinear: return 1.0;
      case MetricKind::kLogistic: return ad::detail::stable_sigmoid(x);
      case MetricKind::kSqrtSoftplus: return 1.0 + x / std::sqrt(x * x + 1.0);
      case MetricKind::kExponential: return std::exp(x);
      case MetricKind::kQuadratic: return 2.0 * (x + a());
      case MetricKind::kHinge: return x + a() > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
  }

  double second(double x) const {
    switch (kind_) {
      case MetricKind::kLinear: return 0.0;
      case MetricKind::kLogistic: {
        double s = ad::detail::stable_sigmoid(x);
        return s * (1.0 - s);
      }
      case MetricKind::kSqrtSoftplus: return std::pow(x * x + 1.0, -1.5);
      case MetricKind::kExponential: return std::exp(x);
      case MetricKind::kQuadratic: return 2.0;
      case MetricKind::kHinge: return 0.0;
    }
    return 0.0;
  }

  ad::Var graph_value(ad::Var v) const {
    switch (kind_) {
      case MetricKind::kLinear: return v;
      case MetricKind::kLogistic: return ad::softplus(v);
      case MetricKind::kSqrtSoftplus: return v + ad::sqrt(ad::square(v) + 1.0);
      case MetricKind::kExponential: return ad::exp(v);
      case MetricKind::kQuadratic: return ad::square(v + a());
      case MetricKind::kHinge: return ad::relu(v + a());
    }
    return v;
  }

  MetricKind kind_;
  std::optional<double> alpha_;
};

// `alpha` must be given exactly for the quadratic and hinge kinds.
inline LossMetric make_metric(MetricKind kind, std::optional<double> alpha = std::nullopt) {
  if (takes_alpha(kind) && !alpha) {
    throw ConfigError("metric '" + std::string(metric_name(kind)) + "' requires alpha");
  }
  if (!takes_alpha(kind) && alpha) {
    throw ConfigError("metric '" + std::string(metric_name(kind)) + "' takes no alpha");
  }
  if (alpha && !std::isfinite(*alpha)) throw ConfigError("metric alpha must be finite");
  return LossMetric(kind, alpha);
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

struct AdmissibilityReport {
  bool phi_increasing = false;     // phi' > 0 on the grid
  bool varphi_decreasing = false;  // varphi' < 0 on the grid
  bool phi_convex = false;         // phi'' >= 0
  bool varphi_convex = false;      // varphi'' >= 0
  std::optional<double> balance_point;  // a with phi'(a) + varphi'(a) = 0
  bool admissible = false;

  bool strictly_monotone() const { return phi_increasing && varphi_decreasing; }
  bool convex() const { return phi_convex && varphi_convex; }
};

inline AdmissibilityReport check_admissible(const LossMetric& m, double grid_lo = -10.0,
                                            double grid_hi = 10.0, double step = 0.01) {
  if (!(grid_lo < grid_hi) || !(step > 0.0)) {
    throw ContractError("check_admissible: need grid_lo < grid_hi and step > 0");
  }
  AdmissibilityReport r;
  r.phi_increasing = r.varphi_decreasing = r.phi_convex = r.varphi_convex = true;
  auto balance = [&](double x) { return m.dphi(x) + m.dvarphi(x); };

  const auto count = static_cast<std::size_t>(std::floor((grid_hi - grid_lo) / step + 0.5));
  double prev_x = grid_lo;
  double prev_h = balance(grid_lo);
  for (std::size_t i = 0; i <= count; ++i) {
    double x = i == count ? grid_hi : grid_lo + static_cast<double>(i) * step;
    if (!(m.dphi(x) > 0.0)) r.phi_increasing = false;
    if (!(m.dvarphi(x) < 0.0)) r.varphi_decreasing = false;
    if (m.d2phi(x) < 0.0) r.phi_convex = false;
    if (m.d2varphi(x) < 0.0) r.varphi_convex = false;

    double h = balance(x);
    if (!r.balance_point) {
      if (h == 0.0) {
        r.balance_point = x;
      } else if (i > 0 && (prev_h < 0.0) != (h < 0.0)) {
        double lo = prev_x;
        double hi = x;
        bool lo_negative = prev_h < 0.0;
        for (int it = 0; it < 200; ++it) {
          double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          double hm = balance(mid);
          if (hm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((hm < 0.0) == lo_negative) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        r.balance_point = 0.5 * (lo + hi);
      }
    }
    prev_x = x;
    prev_h = h;
  }
  r.admissible = r.strictly_monotone() && r.convex() && r.balance_point.has_value();
  return r;
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

// mean(phi(f_fake)) + mean(varphi(f_real))
inline double disc_objective(const LossMetric& m, std::span<const double> f_fake,
                             std::span<const double> f_real) {
  if (f_fake.empty() || f_real.empty()) throw ContractError("disc_objective: empty batch");
  double fake = 0.0;
  for (double v : f_fake) fake += m.phi(v);
  double real = 0.0;
  for (double v : f_real) real += m.varphi(v);
  return fake / static_cast<double>(f_fake.size()) + real / static_cast<double>(f_real.size());
}

// mean(psi(f_fake)) with psi(x) = -x.
inline double gen_objective(std::span<const double> f_fake) {
  if (f_fake.empty()) throw ContractError("gen_objective: empty batch");
  double s = 0.0;
  for (double v : f_fake) s += LossMetric::psi(v);
  return s / static_cast<double>(f_fake.size());
}

inline ad::Var disc_objective(const LossMetric& m, ad::Var f_fake, ad::Var f_real) {
  return ad::mean(m.phi(f_fake)) + ad::mean(m.varphi(f_real));
}

inline ad::Var gen_objective(ad::Var f_fake) { return ad::mean(LossMetric::psi(f_fake)); }

// ---------------------------------------------------------------------------
// Pointwise optimal discriminator of an unrestricted critic
// ---------------------------------------------------------------------------

// Minimizes p_g * phi(t) + p_r * varphi(t) for convex phi, varphi given their
// derivatives, by bisection on the (non-decreasing) derivative of the sum.
inline double minimize_pointwise(const std::function<double(double)>& dphi,
                                 const std::function<double(double)>& dvarphi, double p_g,
                                 double p_r) {
  auto slope = [&](double t) { return p_g * dphi(t) + p_r * dvarphi(t); };
  constexpr double kLimit = 1e6;
  double lo = -1.0;
  double hi = 1.0;
  while (slope(lo) > 0.0) {
    lo *= 2.0;
    if (lo < -kLimit) throw UnboundedError("pointwise objective has no attained minimum");
  }
  while (slope(hi) < 0.0) {
    hi *= 2.0;
    if (hi > kLimit) throw UnboundedError("pointwise objective has no attained minimum");
  }
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double s = slope(mid);
    if (s == 0.0) return mid;
    if (s < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Regression targets of the least-squares pair phi = (t - fake)^2,
// varphi = (t - real)^2.
struct LsganTargets {
  double fake = 0.0;
  double real = 1.0;
};

inline void check_densities(double p_g, double p_r) {
  if (!(p_g >= 0.0) || !(p_r >= 0.0) || !(p_g + p_r > 0.0)) {
    throw ContractError("pointwise_optimal: densities must be non-negative, not both zero");
  }
}

inline double pointwise_optimal_lsgan(double p_g, double p_r, LsganTargets targets = {}) {
  check_densities(p_g, p_r);
  return minimize_pointwise([&](double t) { return 2.0 * (t - targets.fake); },
                            [&](double t) { return 2.0 * (t - targets.real); }, p_g, p_r);
}

// argmin_t p_g * phi(t) + p_r * varphi(t). Throws UnboundedError when the
// infimum is not attained (e.g. the linear pair with p_r != p_g).
inline double pointwise_optimal(const LossMetric& m, double p_g, double p_r) {
  check_densities(p_g, p_r);
  switch (m.kind()) {
    case MetricKind::kLinear:
      // (p_g - p_r) t: flat when balanced, unbounded otherwise.
      if (p_g == p_r) return 0.0;
      throw UnboundedError("linear metric: pointwise objective is unbounded below");
    case MetricKind::kHinge: {
      // Piecewise linear with slope p_g - p_r on [-alpha, alpha].
      double a = *m.alpha();
      if (p_r > p_g) return a;
      if (p_r < p_g) return -a;
      return 0.0;
    }
    case MetricKind::kQuadratic:
      return pointwise_optimal_lsgan(p_g, p_r, {-*m.alpha(), *m.alpha()});
    default:
      // Strictly monotone pairs: with one density zero the objective is
      // monotone in t and never attains its infimum.
      if (p_g == 0.0 || p_r == 0.0) {
        throw UnboundedError("metric '" + std::string(m.name()) +
                             "': pointwise objective has no attained minimum");
      }
      return minimize_pointwise([&](double t) { return m.dphi(t); },
                                [&](double t) { return m.dvarphi(t); }, p_g, p_r);
  }
}

}  // namespace lipgan::loss

#endif  // LIPGAN_LOSS_METRICS_HPP
