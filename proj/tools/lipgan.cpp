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


// lipgan: command-line front end.
//
//   lipgan train <config> -o <dir>
//   lipgan duality <real.csv> <fake.csv> -o <file>
//   lipgan duality --random <n> <d> [--seed s] -o <file>
//   lipgan verify <grad|admissible|theorems> -o <file>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipgan/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Penalized GAN critic experiments and optimal-transport checks"};
  app.require_subcommand(1);

  std::string config, out_dir;
  CLI::App* train = app.add_subcommand("train", "Train a critic/generator pair from a config");
  train->add_option("config", config, "Config file")->required();
  train->add_option("-o,--output", out_dir, "Output directory")->required();

  std::vector<std::string> instance;
  std::vector<std::size_t> random;
  std::uint64_t seed = 0;
  std::string duality_out;
  CLI::App* duality = app.add_subcommand("duality", "Compare primal, KR and compact W1 values");
  auto* files = duality->add_option("instance", instance, "Real and fake distribution CSVs")
                    ->expected(2);
  auto* rnd = duality->add_option("--random", random, "Random instance: atoms per side, dimension")
                  ->expected(2);
  files->excludes(rnd);
  duality->add_option("--seed", seed, "Seed for --random (LIPGAN_SEED takes precedence)");
  duality->add_option("-o,--output", duality_out, "Report file")->required();

  std::string suite, verify_out;
  CLI::App* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("suite", suite, "grad, admissible or theorems")->required();
  verify->add_option("-o,--output", verify_out, "Report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : lipgan::cli::kExitConfig;
  }

  if (train->parsed()) return lipgan::cli::cmd_train(config, out_dir, std::cerr);
  if (verify->parsed()) return lipgan::cli::cmd_verify(suite, verify_out, std::cerr);
  if (!random.empty()) {
    return lipgan::cli::cmd_duality_random(random[0], random[1], seed, duality_out, std::cerr);
  }
  if (instance.size() != 2) {
    std::cerr << "duality: give two distribution files or --random <n> <d>\n";
    return lipgan::cli::kExitConfig;
  }
  return lipgan::cli::cmd_duality_files(instance[0], instance[1], duality_out, std::cerr);
}
