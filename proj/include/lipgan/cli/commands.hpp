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

// Command implementations behind the `lipgan` executable. Each command
// returns a process exit status and reports diagnostics on `err`.

#ifndef LIPGAN_CLI_COMMANDS_HPP
#define LIPGAN_CLI_COMMANDS_HPP

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lipgan/cli/config.hpp"
#include "lipgan/experiments.hpp"
#include "lipgan/format.hpp"
#include "lipgan/ot/ot_oracle.hpp"
#include "lipgan/trainer.hpp"

namespace lipgan::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,  // a check or gap test failed, or an unexpected error
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitCapacity = 4,
};

// Runs `body` and maps library errors onto exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

// Value of LIPGAN_SEED, if set.
inline std::optional<std::uint64_t> seed_override() {
  const char* env = std::getenv("LIPGAN_SEED");
  if (env == nullptr) return std::nullopt;
  std::string s(env);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("LIPGAN_SEED must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline void write_curves(std::ostream& out, const train::TrainReport& r) {
  out << "iteration,disc_loss,gen_loss,mean_f_real,mean_f_fake,k_hat\n";
  for (std::size_t i = 0; i < r.disc_loss.size(); ++i) {
    out << i << ',' << format_double(r.disc_loss[i]) << ',' << format_double(r.gen_loss[i])
        << ',' << format_double(r.mean_f_real[i]) << ',' << format_double(r.mean_f_fake[i])
        << ',' << format_double(r.k_hat[i]) << '\n';
  }
}

inline void write_field(std::ostream& out, const train::FieldGrid& f) {
  out << "x1,x2,f,g1,g2\n";
  for (std::size_t iy = 0; iy < f.ny; ++iy) {
    for (std::size_t ix = 0; ix < f.nx; ++ix) {
      const std::size_t i = iy * f.nx + ix;
      auto p = f.point(ix, iy);
      out << format_double(p[0]) << ',' << format_double(p[1]) << ','
          << format_double(f.values[i]) << ',' << format_double(f.gradients[i][0]) << ','
          << format_double(f.gradients[i][1]) << '\n';
    }
  }
}

inline nlohmann::json train_summary(const train::TrainConfig& c, const train::TrainReport& r) {
  nlohmann::json s;
  s["iterations"] = r.disc_loss.size();
  if (!r.disc_loss.empty()) {
    s["final_disc_loss"] = r.disc_loss.back();
    s["final_gen_loss"] = r.gen_loss.back();
    s["final_mean_f_real"] = r.mean_f_real.back();
    s["final_mean_f_fake"] = r.mean_f_fake.back();
    s["final_k_hat"] = r.k_hat.back();
    s["max_k_hat"] = *std::max_element(r.k_hat.begin(), r.k_hat.end());
  }
  s["drift_window"] = std::min(c.drift_window, r.mean_f_real.size());
  return s;
}

// lipgan train <config> -o <dir>
inline int cmd_train(const std::string& config_path, const std::string& out_dir,
                     std::ostream& err) {
  return guarded(err, [&] {
    Document doc = Document::read(config_path);
    train::TrainConfig cfg = train_config_from(doc);
    if (auto s = seed_override()) cfg.seed = *s;

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir + "'");

    train::TrainReport rep = train::train(cfg);
    {
      std::ofstream out = open_output(dir / "curves.csv");
      write_curves(out, rep);
    }
    {
      std::ofstream out = open_output(dir / "field.csv");
      write_field(out, rep.field);
    }
    nlohmann::json report;
    report["config"] = config_json(cfg);
    report["drift"] = rep.drift;
    report["summary"] = train_summary(cfg, rep);
    write_json(dir / "report.json", report);
    return int{kExitOk};
  });
}

// ---------------------------------------------------------------------------
// duality
// ---------------------------------------------------------------------------

inline constexpr double kDualityTolerance = 1e-6;

inline nlohmann::json dist_json(const ot::DiscreteDist& d) {
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto row = d.atom(i);
    atoms.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"atoms", atoms}, {"masses", d.masses}};
}

inline int run_duality(const ot::DiscreteDist& p, const ot::DiscreteDist& q,
                       const std::string& out_path, nlohmann::json source) {
  ot::DualityReport r = ot::verify_duality(p, q, kDualityTolerance);
  nlohmann::json j;
  j["source"] = std::move(source);
  j["real"] = dist_json(p);
  j["fake"] = dist_json(q);
  j["primal"] = r.primal;
  j["kr"] = r.kr;
  j["compact"] = r.compact;
  j["max_gap"] = r.max_gap;
  j["tolerance"] = kDualityTolerance;
  j["passed"] = r.passed;
  write_json(out_path, j);
  return r.passed ? kExitOk : kExitFailed;
}

// lipgan duality <real.csv> <fake.csv> -o <file>
inline int cmd_duality_files(const std::string& real_path, const std::string& fake_path,
                             const std::string& out_path, std::ostream& err) {
  return guarded(err, [&] {
    return run_duality(ot::read_dist_csv(real_path), ot::read_dist_csv(fake_path), out_path,
                       {{"real", real_path}, {"fake", fake_path}});
  });
}

// lipgan duality --random <n> <d> -o <file>: n atoms per side in d
// dimensions, random masses.
inline int cmd_duality_random(std::size_t n, std::size_t dim, std::uint64_t seed,
                              const std::string& out_path, std::ostream& err) {
  return guarded(err, [&] {
    std::uint64_t s = seed_override().value_or(seed);
    if (n < 1 || dim < 1) throw ConfigError("--random needs n >= 1 and d >= 1");
    if (n > ot::kMaxAtomsPerSide) {
      throw CapacityError("oracle capacity is " + std::to_string(ot::kMaxAtomsPerSide) +
                          " atoms per side, got " + std::to_string(n));
    }
    std::mt19937_64 rng(s);
    ot::DiscreteDist p = experiments::random_dist(n, dim, rng, false);
    ot::DiscreteDist q = experiments::random_dist(n, dim, rng, false);
    return run_duality(p, q, out_path, {{"random", {{"n", n}, {"d", dim}, {"seed", s}}}});
  });
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Property {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

inline Property at_most(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value <= threshold};
}

inline Property at_least(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value >= threshold};
}

inline std::vector<Property> grad_properties(std::uint64_t seed) {
  experiments::GradSuiteReport g = experiments::grad_suite(100, seed);
  return {at_most("first_order_fd_max_rel_error", g.first_order, 1e-4),
          at_most("gp_double_backward_fd_max_rel_error", g.gp, 1e-3),
          at_most("maxgp_double_backward_fd_max_rel_error", g.maxgp, 1e-3)};
}

inline std::vector<Property> admissible_properties() {
  std::vector<Property> out;
  for (const auto& row : experiments::admissibility_suite()) {
    out.push_back({"admissible." + row.metric, row.admissible ? 1.0 : 0.0,
                   row.expected ? 1.0 : 0.0, row.admissible == row.expected});
  }
  return out;
}

inline std::vector<Property> theorem_properties(std::uint64_t seed) {
  std::vector<Property> out;

  // Bounding pairs on the lines fixture: every fake atom is tight against the
  // real atom at the same height.
  auto [real, fake] = ot::discretized_lines(20);
  ot::DualSolution s = ot::compact_dual(real, fake);
  auto pairs = ot::bounding_pairs(s.f, s.points, 1.0, 1e-3);
  std::size_t bound = 0, fakes = 0;
  for (std::size_t v = 0; v < s.f.size(); ++v) {
    if (!s.in_q[v]) continue;
    ++fakes;
    for (auto [a, b] : pairs) {
      if (b == v && s.in_p[a] && s.points(a, 1) == s.points(v, 1)) {
        ++bound;
        break;
      }
    }
  }
  out.push_back(at_least("bounding_pairs.lines_fraction_of_fakes_bound",
                         static_cast<double>(bound) / static_cast<double>(fakes), 1.0));
  experiments::BoundingReport ov = experiments::overlapping_bounding_suite(50, seed);
  out.push_back(at_least("bounding_pairs.overlapping_fraction_with_pair",
                         static_cast<double>(ov.with_pairs) / static_cast<double>(ov.instances),
                         1.0));

  experiments::DirectionReport dir = experiments::gradient_direction(seed);
  out.push_back(at_least("line_gradient.two_atom_min_cosine", dir.two_atom_min_cosine, 0.99));
  out.push_back(at_least("line_gradient.fraction_of_fakes_aligned", dir.fraction_aligned, 0.9));

  const std::pair<loss::MetricKind, std::uint64_t> runs[] = {
      {loss::MetricKind::kLogistic, seed},     {loss::MetricKind::kLogistic, seed + 1},
      {loss::MetricKind::kExponential, seed},  {loss::MetricKind::kSqrtSoftplus, seed},
      {loss::MetricKind::kLinear, seed}};
  std::size_t nash_ok = 0;
  for (auto [metric, sd] : runs) {
    if (experiments::nash_k_hat(metric, sd) <= 0.05) ++nash_ok;
  }
  out.push_back(at_least("nash.runs_with_k_hat_at_most_0.05", static_cast<double>(nash_ok), 4.0));

  out.push_back(at_most("scaling.max_abs_gap", experiments::scaling_suite(50, seed), 1e-9));
  return out;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"grad", "admissible", "theorems"};
  return names;
}

// lipgan verify <suite> -o <file>
inline int cmd_verify(const std::string& suite, const std::string& out_path, std::ostream& err) {
  return guarded(err, [&] {
    std::uint64_t seed = seed_override().value_or(0);
    std::vector<Property> props;
    if (suite == "grad") {
      props = grad_properties(seed);
    } else if (suite == "admissible") {
      props = admissible_properties();
    } else if (suite == "theorems") {
      props = theorem_properties(seed);
    } else {
      throw ConfigError("unknown suite '" + suite + "' (expected grad, admissible or theorems)");
    }
    bool all = true;
    nlohmann::json list = nlohmann::json::array();
    for (const Property& p : props) {
      all = all && p.passed;
      list.push_back(
          {{"name", p.name}, {"value", p.value}, {"threshold", p.threshold}, {"passed", p.passed}});
    }
    write_json(out_path, {{"suite", suite}, {"seed", seed}, {"properties", list}, {"passed", all}});
    return all ? kExitOk : kExitFailed;
  });
}

}  // namespace lipgan::cli

#endif  // LIPGAN_CLI_COMMANDS_HPP
