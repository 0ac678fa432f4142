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

// Experiment configuration documents.
//
//   schema = lipgan/1
//   [train]
//   metric = logistic
//   iterations = 1000
//   [data]
//   kind = gaussian_mixture
//   means = -1 0; 1 0
//
// One `key = value` per line, `[section]` headers, `#` comments. Lists are
// whitespace or comma separated; point lists separate points with ';'.
// Every key must be recognised and the schema line is mandatory.

#ifndef LIPGAN_CLI_CONFIG_HPP
#define LIPGAN_CLI_CONFIG_HPP

#include <charconv>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lipgan/error.hpp"
#include "lipgan/trainer.hpp"

namespace lipgan::cli {

inline constexpr std::string_view kSchemaVersion = "lipgan/1";

namespace detail {
inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, std::string_view seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (seps.find(ch) != std::string_view::npos) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}
}  // namespace detail

// Parsed document. Keys are addressed as "section.key"; keys before the
// first section header have no prefix.
class Document {
 public:
  static Document parse(std::istream& in) {
    Document doc;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      std::string t = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) {
          throw ConfigError("config line " + std::to_string(lineno) + ": malformed section '" +
                            t + "'");
        }
        section = detail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      std::string key = detail::trim(t.substr(0, eq));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      std::string full = section.empty() ? key : section + "." + key;
      if (doc.entries_.count(full)) {
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + full +
                          "'");
      }
      doc.entries_[full] = {detail::trim(t.substr(eq + 1)), lineno, false};
    }
    return doc;
  }

  static Document parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Document read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  bool has_section(const std::string& section) const {
    auto it = entries_.lower_bound(section + ".");
    return it != entries_.end() && it->first.rfind(section + ".", 0) == 0;
  }

  // Marks the key as consumed and returns its raw value.
  std::optional<std::string> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  void get(const std::string& key, double& out) {
    if (auto v = take(key)) out = to_double(key, *v);
  }
  template <std::unsigned_integral U>
  void get(const std::string& key, U& out) {
    if (auto v = take(key)) out = to_unsigned<U>(key, *v);
  }
  void get(const std::string& key, bool& out) {
    if (auto v = take(key)) {
      if (*v == "true") {
        out = true;
      } else if (*v == "false") {
        out = false;
      } else {
        fail(key, "expected true or false, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (auto v = take(key)) out = to_list(key, *v);
  }
  void get(const std::string& key, std::vector<std::vector<double>>& out) {
    if (auto v = take(key)) {
      out.clear();
      for (const std::string& p : detail::split(*v, ";")) {
        std::vector<double> pt = to_list(key, p);
        if (!pt.empty()) out.push_back(std::move(pt));
      }
      if (out.empty()) fail(key, "expected at least one point");
    }
  }
  void get(const std::string& key, train::Box& out) {
    if (auto v = take(key)) {
      std::vector<double> b = to_list(key, *v);
      if (b.size() != 4) fail(key, "expected four numbers: x_lo x_hi y_lo y_hi");
      out = {b[0], b[1], b[2], b[3]};
    }
  }

  // Throws on the first key no mapping consumed.
  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) {
        throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + key +
                          "'");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    std::string where = it == entries_.end() ? "config" : "config line " +
                                                              std::to_string(it->second.line);
    throw ConfigError(where + ": key '" + key + "': " + msg);
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };

  double to_double(const std::string& key, const std::string& s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      fail(key, "expected a number, got '" + s + "'");
    }
    return v;
  }

  template <class U>
  U to_unsigned(const std::string& key, const std::string& s) const {
    U v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      fail(key, "expected a non-negative integer, got '" + s + "'");
    }
    return v;
  }

  std::vector<double> to_list(const std::string& key, const std::string& s) const {
    std::vector<double> out;
    for (const std::string& tok : detail::split(s, " \t,")) out.push_back(to_double(key, tok));
    return out;
  }

  std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

inline train::SyntheticSpec read_data(Document& doc, const std::string& s) {
  train::SyntheticSpec d;
  auto kind = doc.take(s + ".kind");
  if (!kind) throw ConfigError("config: missing key '" + s + ".kind'");
  try {
    d.kind = train::parse_data_kind(*kind);
  } catch (const ConfigError& e) {
    doc.fail(s + ".kind", e.what());
  }
  doc.get(s + ".line_offset", d.line_offset);
  doc.get(s + ".z_lo", d.z_lo);
  doc.get(s + ".z_hi", d.z_hi);
  doc.get(s + ".region_a", d.region_a);
  doc.get(s + ".region_b", d.region_b);
  doc.get(s + ".mass_a", d.mass_a);
  doc.get(s + ".means", d.means);
  doc.get(s + ".stddevs", d.stddevs);
  doc.get(s + ".weights", d.weights);
  doc.get(s + ".atoms", d.atoms);
  doc.get(s + ".masses", d.masses);
  doc.get(s + ".stratified", d.stratified);
  return d;
}

inline void read_mlp(Document& doc, const std::string& s, nn::MlpConfig& cfg) {
  doc.get(s + ".hidden_width", cfg.hidden_width);
  doc.get(s + ".depth", cfg.depth);
  if (auto a = doc.take(s + ".activation")) {
    try {
      cfg.activation = nn::parse_activation(*a);
    } catch (const ConfigError& e) {
      doc.fail(s + ".activation", e.what());
    }
  }
}

// Builds and validates a TrainConfig. Absent keys keep their defaults.
inline train::TrainConfig train_config_from(Document& doc) {
  auto schema = doc.take("schema");
  if (!schema) throw ConfigError("config: missing 'schema' line");
  if (*schema != kSchemaVersion) {
    doc.fail("schema", "unsupported schema '" + *schema + "', expected '" +
                           std::string(kSchemaVersion) + "'");
  }

  train::TrainConfig c;
  if (auto m = doc.take("train.metric")) {
    try {
      c.metric = loss::parse_metric_kind(*m);
    } catch (const Error& e) {
      doc.fail("train.metric", e.what());
    }
  }
  if (doc.has("train.alpha")) {
    double a = 0.0;
    doc.get("train.alpha", a);
    c.alpha = a;
  } else if (loss::takes_alpha(c.metric)) {
    c.alpha = 1.0;
  }
  doc.get("train.iterations", c.iterations);
  doc.get("train.n_critic", c.n_critic);
  doc.get("train.batch_size", c.batch_size);
  doc.get("train.seed", c.seed);
  doc.get("train.fix_generator", c.fix_generator);
  doc.get("train.drift_window", c.drift_window);

  if (auto k = doc.take("penalty.kind")) {
    try {
      c.penalty.kind = penalty::parse_penalty_kind(*k);
    } catch (const Error& e) {
      doc.fail("penalty.kind", e.what());
    }
  }
  doc.get("penalty.lambda", c.penalty.lambda);
  doc.get("penalty.k0", c.penalty.k0);
  doc.get("penalty.smax_capacity", c.penalty.smax_capacity);

  doc.get("adam.lr", c.adam.lr);
  doc.get("adam.beta1", c.adam.beta1);
  doc.get("adam.beta2", c.adam.beta2);
  doc.get("adam.eps", c.adam.eps);

  read_mlp(doc, "critic", c.critic_cfg);
  read_mlp(doc, "generator", c.gen_cfg);
  doc.get("generator.noise_dim", c.gen_cfg.input_dim);

  if (doc.has_section("data")) c.data = read_data(doc, "data");
  if (doc.has_section("fake_data")) c.fake_data = read_data(doc, "fake_data");

  doc.get("field.box", c.field_box);
  doc.get("field.resolution", c.field_resolution);

  doc.reject_unused();
  c.critic_cfg.input_dim = c.data.dim();
  c.critic_cfg.output_dim = 1;
  c.gen_cfg.output_dim = c.data.dim();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Echo
// ---------------------------------------------------------------------------

inline nlohmann::json box_json(const train::Box& b) {
  return nlohmann::json::array({b.x_lo, b.x_hi, b.y_lo, b.y_hi});
}

inline nlohmann::json data_json(const train::SyntheticSpec& d) {
  nlohmann::json j;
  j["kind"] = std::string(train::data_kind_name(d.kind));
  switch (d.kind) {
    case train::DataKind::kParallelLines:
      j["line_offset"] = d.line_offset;
      j["z_lo"] = d.z_lo;
      j["z_hi"] = d.z_hi;
      break;
    case train::DataKind::kTwoDensityRegions:
      j["region_a"] = box_json(d.region_a);
      j["region_b"] = box_json(d.region_b);
      j["mass_a"] = d.mass_a;
      break;
    case train::DataKind::kGaussianMixture:
      j["means"] = d.means;
      j["stddevs"] = d.stddevs;
      j["weights"] = d.weights;
      break;
    case train::DataKind::kDiscretePoints:
      j["atoms"] = d.atoms;
      j["masses"] = d.masses;
      j["stratified"] = d.stratified;
      break;
  }
  return j;
}

inline nlohmann::json mlp_json(const nn::MlpConfig& m) {
  return {{"input_dim", m.input_dim},
          {"hidden_width", m.hidden_width},
          {"depth", m.depth},
          {"output_dim", m.output_dim},
          {"activation", std::string(nn::activation_name(m.activation))}};
}

// Fully resolved configuration, defaults included.
inline nlohmann::json config_json(const train::TrainConfig& c) {
  nlohmann::json j;
  j["schema"] = std::string(kSchemaVersion);
  j["train"] = {{"metric", std::string(loss::metric_name(c.metric))},
                {"iterations", c.iterations},
                {"n_critic", c.n_critic},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"fix_generator", c.fix_generator},
                {"drift_window", c.drift_window}};
  j["train"]["alpha"] = c.alpha ? nlohmann::json(*c.alpha) : nlohmann::json();
  j["penalty"] = {{"kind", std::string(penalty::penalty_name(c.penalty.kind))},
                  {"lambda", c.penalty.lambda},
                  {"k0", c.penalty.k0},
                  {"smax_capacity", c.penalty.smax_capacity}};
  j["adam"] = {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
               {"eps", c.adam.eps}};
  j["critic"] = mlp_json(c.critic_cfg);
  j["generator"] = mlp_json(c.gen_cfg);
  j["data"] = data_json(c.data);
  j["fake_data"] = c.fake_data ? data_json(*c.fake_data) : nlohmann::json();
  j["field"] = {{"box", box_json(c.field_box)}, {"resolution", c.field_resolution}};
  return j;
}

}  // namespace lipgan::cli

#endif  // LIPGAN_CLI_CONFIG_HPP
