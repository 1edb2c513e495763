/*
 * Copyright 2026 The CodeOOD Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver for the CODE out-of-distribution benchmark pipeline.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bench/config.hpp"
#include "bench/pipeline.hpp"
#include "codeood/codeood.h"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scorers;
  std::string mode;
  std::optional<std::size_t> p;
  std::optional<double> lambda_u;
  std::optional<double> threshold;
  bool strict = false;
};

codeood::bench::Config Resolve(const Flags& flags) {
  using codeood::bench::Config;
  using codeood::bench::ConfigError;
  Config config = flags.config_path.empty() ? Config::Defaults() : Config::Load(flags.config_path);
  if (flags.seed) config.Set("seed", std::to_string(*flags.seed));
  if (!flags.out.empty()) config.Set("out", flags.out);
  if (!flags.scorers.empty()) config.Set("scorers", flags.scorers);
  if (!flags.mode.empty()) config.Set("code.mode", flags.mode);
  if (flags.p) config.Set("detector.per_class", std::to_string(*flags.p));
  // Round-trip exact text for the float overrides.
  char buf[32];
  if (flags.lambda_u) {
    std::snprintf(buf, sizeof(buf), "%.17g", *flags.lambda_u);
    config.Set("detector.lambda_u", buf);
  }
  if (flags.threshold) {
    std::snprintf(buf, sizeof(buf), "%.17g", *flags.threshold);
    config.Set("detector.threshold", buf);
  }
  if (flags.strict) config.Set("strict", "true");
  if (config.GetBool("strict") && !config.IsExplicit("seed")) {
    throw ConfigError("strict mode: a seed must be given with --seed or the 'seed' key");
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CODE: pattern-detector confidence for out-of-distribution detection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(codeood_version()));

  Flags flags;
  app.add_option("--config", flags.config_path, "Experiment config (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Master seed");
  app.add_option("--out", flags.out, "Artifact and report directory");
  app.add_option("--scorers", flags.scorers,
                 std::string("Comma-separated scorers (") + codeood_scorer_names() + ")");
  app.add_option("--mode", flags.mode, "CODE mode used by the sweeps")
      ->check(CLI::IsMember({"weighted", "top1"}));
  app.add_option("--p", flags.p, "Detectors per class");
  app.add_option("--lambda-u", flags.lambda_u, "Weight of the unicity loss");
  app.add_option("--threshold", flags.threshold, "Unicity hinge threshold t");
  app.add_flag("--strict", flags.strict, "Fail when no seed is given");

  std::string chosen;
  void (*run)(const codeood::bench::Config&, const std::filesystem::path&) = nullptr;
  for (const codeood::bench::Stage& stage : codeood::bench::Stages()) {
    app.add_subcommand(stage.name, stage.help)->callback([&chosen, &run, stage] {
      chosen = stage.name;
      run = stage.run;
    });
  }
  app.add_subcommand("run", "Run every stage and write the report")->callback([&] {
    chosen = "run";
    run = codeood::bench::RunPipeline;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const codeood::bench::Config config = Resolve(flags);
    run(config, config.GetString("out"));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "codeood %s: error: %s\n", chosen.c_str(), e.what());
    return 1;
  }
  return 0;
}
