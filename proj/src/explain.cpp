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

#include "codeood/explain.hpp"

#include <cmath>
#include <limits>

#include "codeood/error.hpp"
#include "json.hpp"

namespace codeood {

std::vector<Prototype> ExtractPrototypes(const DetectorBank& bank, const CalibrationStats& stats,
                                         const FeatureSet& train) {
  Require(stats.num_classes == bank.num_classes() && stats.per_class == bank.per_class(),
          Errc::kState, "extract_prototypes: calibration stats do not match the bank");
  Require(train.num_classes == bank.num_classes(), Errc::kDimensionMismatch,
          "extract_prototypes: feature set class count does not match the bank");
  const std::size_t p = bank.per_class();
  std::vector<Prototype> best(bank.num_classes() * p);
  std::vector<double> best_gap(best.size(), std::numeric_limits<double>::infinity());
  for (std::size_t n = 0; n < train.size(); ++n) {
    const FeatureRecord& r = train.records[n];
    for (std::size_t i = 0; i < p; ++i) {
      const CorrelationPeak peak = MaxCorrelationPeak(bank, r.label, i, r.features);
      const double gap = std::abs(peak.value - stats.mean(r.label, i));
      const std::size_t slot = r.label * p + i;
      if (gap < best_gap[slot]) {
        best_gap[slot] = gap;
        best[slot] = Prototype{r.label, i, n, peak.value, peak.h, peak.w};
      }
    }
  }
  for (std::uint32_t c = 0; c < bank.num_classes(); ++c) {
    Require(std::isfinite(best_gap[c * p]), Errc::kInvalidArgument,
            "extract_prototypes: class " + std::to_string(c) + " has no training samples");
  }
  return best;
}

Explanation Explain(const DetectorBank& bank, const CalibrationStats& stats,
                    const Classifier& model, const Image& image,
                    const std::vector<Prototype>& prototypes, double threshold) {
  const Activations act = model.Forward(image);
  Explanation e;
  e.predicted_class = static_cast<std::uint32_t>(ArgMax(act.logits));
  e.score = CodeConfidence(bank, stats, act.features, act.logits, CodeMode::kWeighted);
  e.threshold = threshold;
  for (std::size_t i = 0; i < bank.per_class(); ++i) {
    DetectorEvidence d;
    d.detector = i;
    d.confidence = DetectorConfidence(bank, stats, e.predicted_class, i, act.features);
    d.present = d.confidence > threshold;
    if (d.present) {
      const CorrelationPeak peak = MaxCorrelationPeak(bank, e.predicted_class, i, act.features);
      const PixelBox box = model.ReceptiveField(peak.h, peak.w);
      d.box = box;
      d.location = PixelLocation{(box.top + box.bottom) / 2, (box.left + box.right) / 2};
    }
    e.detectors.push_back(d);
  }
  for (const Prototype& proto : prototypes) {
    if (proto.cls == e.predicted_class) e.prototypes.push_back(proto);
  }
  return e;
}

std::string ExplanationJson(const Explanation& e) {
  nlohmann::ordered_json j;
  j["predicted_class"] = e.predicted_class;
  j["score"] = e.score;
  j["threshold"] = e.threshold;
  j["detectors"] = nlohmann::ordered_json::array();
  for (const DetectorEvidence& d : e.detectors) {
    nlohmann::ordered_json item;
    item["detector"] = d.detector;
    item["confidence"] = d.confidence;
    item["present"] = d.present;
    if (d.location) {
      item["location"] = {{"row", d.location->row}, {"col", d.location->col}};
      item["box"] = {d.box->top, d.box->left, d.box->bottom, d.box->right};
    } else {
      item["location"] = nullptr;
    }
    j["detectors"].push_back(item);
  }
  j["prototypes"] = nlohmann::ordered_json::array();
  for (const Prototype& p : e.prototypes) {
    j["prototypes"].push_back({{"class", p.cls},
                               {"detector", p.detector},
                               {"sample", p.sample_index},
                               {"score", p.score},
                               {"feature_cell", {p.feature_h, p.feature_w}}});
  }
  return j.dump(2);
}

Image CropReceptiveField(const Classifier& model, const Image& image, std::size_t h,
                         std::size_t w) {
  const PixelBox box = model.ReceptiveField(h, w);
  Require(box.bottom < image.height && box.right < image.width, Errc::kDimensionMismatch,
          "receptive field exceeds the image");
  Image crop(image.channels, box.bottom - box.top + 1, box.right - box.left + 1);
  for (std::size_t y = 0; y < crop.height; ++y) {
    for (std::size_t x = 0; x < crop.width; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        crop.at(y, x, c) = image.at(box.top + y, box.left + x, c);
      }
    }
  }
  crop.label = image.label;
  return crop;
}

}  // namespace codeood
