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

#ifndef CODEOOD_EXPLAIN_HPP_
#define CODEOOD_EXPLAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/confidence.hpp"
#include "codeood/detector.hpp"
#include "codeood/feature_set.hpp"

namespace codeood {

constexpr double kDefaultPresenceThreshold = 0.3;

// Reference training sample for detector (cls, detector): the sample of class
// cls whose maximum correlation score is closest to the detector's mean.
struct Prototype {
  std::uint32_t cls = 0;
  std::size_t detector = 0;
  std::size_t sample_index = 0;  // index into the training feature set
  double score = 0.0;            // H of the prototype sample
  std::size_t feature_h = 0;     // max-correlation cell
  std::size_t feature_w = 0;
};

// Ties resolve to the lowest sample index.
std::vector<Prototype> ExtractPrototypes(const DetectorBank& bank, const CalibrationStats& stats,
                                         const FeatureSet& train);

struct PixelLocation {
  std::size_t row = 0;
  std::size_t col = 0;
};

struct DetectorEvidence {
  std::size_t detector = 0;
  double confidence = 0.0;
  bool present = false;
  // Centre of the receptive field of the max-correlation cell; set when present.
  std::optional<PixelLocation> location;
  std::optional<PixelBox> box;
};

struct Explanation {
  std::uint32_t predicted_class = 0;
  double score = 0.0;  // weighted CODE confidence
  double threshold = kDefaultPresenceThreshold;
  std::vector<DetectorEvidence> detectors;
  std::vector<Prototype> prototypes;  // of the predicted class, one per detector
};

// Explains `image` by the detectors of its predicted class only: detector i is
// present iff C_i(x) > threshold.
Explanation Explain(const DetectorBank& bank, const CalibrationStats& stats,
                    const Classifier& model, const Image& image,
                    const std::vector<Prototype>& prototypes,
                    double threshold = kDefaultPresenceThreshold);

std::string ExplanationJson(const Explanation& explanation);

// Crop of `image` covering the receptive field of feature cell (h, w).
Image CropReceptiveField(const Classifier& model, const Image& image, std::size_t h,
                         std::size_t w);

}  // namespace codeood

#endif  // CODEOOD_EXPLAIN_HPP_
