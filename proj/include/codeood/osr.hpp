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

#ifndef CODEOOD_OSR_HPP_
#define CODEOOD_OSR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/detector.hpp"
#include "codeood/image.hpp"

namespace codeood {

struct OsrConfig {
  std::uint32_t closed_classes = 6;
  std::uint32_t splits = 5;
  std::uint64_t seed = 0;
  ClassifierConfig classifier;
  DetectorParams detector;
  DetectorTrainConfig detector_training;
  std::vector<std::string> scorers = {"code"};
};

struct OsrSplitResult {
  std::vector<std::uint32_t> closed;  // sorted original class ids
  std::vector<std::uint32_t> open;
  double classifier_accuracy = 0.0;  // on the closed-class test images
  std::vector<double> auroc;         // one per scorer
};

struct OsrResult {
  std::vector<std::string> scorers;
  std::vector<OsrSplitResult> splits;
  std::vector<double> mean_auroc;  // one per scorer
};

// Closed-class draws: split s shuffles class ids with a stream derived from
// (seed, s) and keeps the first `closed` (sorted).
std::vector<std::vector<std::uint32_t>> OsrSplits(std::uint32_t num_classes,
                                                  std::uint32_t closed, std::uint32_t splits,
                                                  std::uint64_t seed);

// For every split: train classifier, detectors, calibration and FNRD on the
// closed classes only, then score closed-class test images (ID) against
// open-class test images (OoD) and record the AUROC per scorer.
OsrResult OsrEvaluate(const Dataset& train, const Dataset& test, const OsrConfig& config);

}  // namespace codeood

#endif  // CODEOOD_OSR_HPP_
