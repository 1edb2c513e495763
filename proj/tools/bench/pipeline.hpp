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

#ifndef CODEOOD_TOOLS_BENCH_PIPELINE_HPP_
#define CODEOOD_TOOLS_BENCH_PIPELINE_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bench/config.hpp"

namespace codeood::bench {

// Failure of a pipeline stage (missing artifact, library error, bad setup).
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every stage reads the artifacts of earlier stages from `out` and writes its
// own there. Datasets are regenerated (synthetic) or reloaded (IDX) from the
// config, so a stage depends only on the config and the artifacts.
struct Stage {
  const char* name;
  const char* help;
  void (*run)(const Config& config, const std::filesystem::path& out);
};

const std::vector<Stage>& Stages();

void TrainClassifierStage(const Config& config, const std::filesystem::path& out);
void ExtractFeaturesStage(const Config& config, const std::filesystem::path& out);
void TrainDetectorsStage(const Config& config, const std::filesystem::path& out);
void CalibrateStage(const Config& config, const std::filesystem::path& out);
void EvalOodStage(const Config& config, const std::filesystem::path& out);
void EvalPerturbationStage(const Config& config, const std::filesystem::path& out);
void EvalOsrStage(const Config& config, const std::filesystem::path& out);
void ExplainStage(const Config& config, const std::filesystem::path& out);
// Merges the stage outputs into report.json / report.csv.
void ReportStage(const Config& config, const std::filesystem::path& out);
// Every stage above in order.
void RunPipeline(const Config& config, const std::filesystem::path& out);

// Scorers used by eval-ood: both CODE modes first, then the configured list.
std::vector<std::string> OodScorers(const Config& config);
// Scorers used by the sweeps: the configured list with `code` mapped to the
// CODE variant selected by code.mode.
std::vector<std::string> SweepScorers(const Config& config);

}  // namespace codeood::bench

#endif  // CODEOOD_TOOLS_BENCH_PIPELINE_HPP_
