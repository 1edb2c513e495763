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
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/confidence.hpp"
#include "codeood/error.hpp"
#include "codeood/feature_set.hpp"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.hpp"

namespace codeood {
namespace {

using testing::Blobs;

FeatureSet ScalarSet(const std::vector<std::vector<double>>& per_class) {
  FeatureSet set;
  set.height = set.width = set.depth = 1;
  set.num_classes = static_cast<std::uint32_t>(per_class.size());
  for (std::uint32_t c = 0; c < per_class.size(); ++c) {
    for (double v : per_class[c]) {
      FeatureRecord r;
      r.label = c;
      r.logits.assign(per_class.size(), 0.0);
      r.features = FeatureMap(1, 1, 1, v);
      set.records.push_back(r);
    }
  }
  return set;
}

DetectorBank UnitBank(std::uint32_t classes, std::size_t p) {
  DetectorParams params;
  params.per_class = p;
  DetectorBank bank(classes, 1, params);
  for (double& k : bank.data()) k = 1.0;
  return bank;
}

CalibrationStats Stats(std::uint32_t classes, std::size_t p, std::vector<double> mu) {
  CalibrationStats s;
  s.num_classes = classes;
  s.per_class = p;
  s.mu = std::move(mu);
  s.sigma.assign(classes * p, 1.0);
  return s;
}

// A trained two-class model with its detectors and calibration.
struct Pipeline {
  Dataset train;
  Classifier model;
  FeatureSet features;
  DetectorBank bank;
  CalibrationStats stats;
  std::vector<Prototype> prototypes;
};

const Pipeline& SharedPipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    out.train = Blobs(20, 3);
    ClassifierConfig config;
    config.conv1_channels = 3;
    config.feature_channels = 4;
    config.epochs = 30;
    config.batch_size = 8;
    out.model = TrainClassifier(out.train, config);
    out.model.Freeze();
    out.features = ExtractFeatureSet(out.model, out.train);
    DetectorTrainConfig dconfig;
    dconfig.epochs = 20;
    out.bank = TrainDetectors(out.features, DetectorParams{}, dconfig);
    out.stats = Calibrate(out.bank, out.features);
    out.prototypes = ExtractPrototypes(out.bank, out.stats, out.features);
    return out;
  }();
  return p;
}

TEST(Prototypes, SingleSampleClass) {
  const FeatureSet set = ScalarSet({{4.0}, {1.0, 2.0}});
  const DetectorBank bank = UnitBank(2, 3);
  const CalibrationStats stats = Stats(2, 3, {9.0, -9.0, 0.0, 0.0, 0.0, 0.0});
  const auto protos = ExtractPrototypes(bank, stats, set);
  ASSERT_EQ(protos.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(protos[i].sample_index, 0u);
    EXPECT_EQ(protos[i].cls, 0u);
    EXPECT_EQ(protos[i].detector, i);
  }
}

TEST(Prototypes, NearestToMean) {
  const FeatureSet set = ScalarSet({{1.0, 2.0, 3.0}});
  const auto protos = ExtractPrototypes(UnitBank(1, 1), Stats(1, 1, {2.1}), set);
  EXPECT_EQ(protos[0].sample_index, 1u);
  EXPECT_EQ(protos[0].score, 2.0);
}

TEST(Prototypes, TiesPickLowestIndexAndOrderOtherwiseIrrelevant) {
  const auto tie = ExtractPrototypes(UnitBank(1, 1), Stats(1, 1, {2.0}), ScalarSet({{3.0, 1.0}}));
  EXPECT_EQ(tie[0].sample_index, 0u);
  const auto a = ExtractPrototypes(UnitBank(1, 1), Stats(1, 1, {2.6}), ScalarSet({{1.0, 2.5, 4.0}}));
  const auto b = ExtractPrototypes(UnitBank(1, 1), Stats(1, 1, {2.6}), ScalarSet({{4.0, 1.0, 2.5}}));
  EXPECT_EQ(a[0].score, b[0].score);
  EXPECT_EQ(b[0].sample_index, 2u);
}

TEST(Prototypes, MismatchedInputs) {
  const FeatureSet set = ScalarSet({{1.0, 2.0}});
  EXPECT_THROW(ExtractPrototypes(UnitBank(1, 2), Stats(1, 1, {0.0}), set), Error);
  EXPECT_THROW(ExtractPrototypes(UnitBank(2, 1), Stats(2, 1, {0.0, 0.0}), set), Error);
}

TEST(Explain, PresenceFollowsThreshold) {
  const Pipeline& p = SharedPipeline();
  ASSERT_EQ(Accuracy(p.model, p.train), 1.0);
  for (std::size_t n = 0; n < 6; ++n) {
    const Image& image = p.train.images[n];
    const Explanation e = Explain(p.bank, p.stats, p.model, image, p.prototypes);
    EXPECT_EQ(e.threshold, kDefaultPresenceThreshold);
    EXPECT_EQ(e.predicted_class, p.model.Predict(image));
    ASSERT_EQ(e.detectors.size(), p.bank.per_class());
    ASSERT_EQ(e.prototypes.size(), p.bank.per_class());
    for (const Prototype& proto : e.prototypes) EXPECT_EQ(proto.cls, e.predicted_class);
    for (const DetectorEvidence& d : e.detectors) {
      EXPECT_EQ(d.present, d.confidence > 0.3);
      EXPECT_EQ(d.location.has_value(), d.present);
      if (d.location) {
        EXPECT_LT(d.location->row, 8u);
        EXPECT_LT(d.location->col, 8u);
        EXPECT_LE(d.box->top, d.location->row);
        EXPECT_GE(d.box->bottom, d.location->row);
      }
    }
  }
}

TEST(Explain, EverythingAbsentAboveAllConfidences) {
  const Pipeline& p = SharedPipeline();
  const Explanation e =
      Explain(p.bank, p.stats, p.model, p.train.images[0], p.prototypes, 1.0);
  for (const DetectorEvidence& d : e.detectors) {
    EXPECT_FALSE(d.present);
    EXPECT_FALSE(d.location.has_value());
  }
}

TEST(Explain, PrototypeImageShowsItsOwnDetector) {
  const Pipeline& p = SharedPipeline();
  for (const Prototype& proto : p.prototypes) {
    const Image& image = p.train.images[proto.sample_index];
    const Explanation e = Explain(p.bank, p.stats, p.model, image, p.prototypes);
    ASSERT_EQ(e.predicted_class, proto.cls);
    const DetectorEvidence& d = e.detectors[proto.detector];
    // Closest to the mean means closest to 1/2 among the class's samples.
    for (const FeatureRecord& r : p.features.records) {
      if (r.label != proto.cls) continue;
      const double other = DetectorConfidence(p.bank, p.stats, proto.cls, proto.detector, r.features);
      EXPECT_LE(std::abs(d.confidence - 0.5), std::abs(other - 0.5) + 1e-12);
    }
    EXPECT_TRUE(d.present);
  }
}

TEST(Explain, JsonShape) {
  const Pipeline& p = SharedPipeline();
  const Explanation e = Explain(p.bank, p.stats, p.model, p.train.images[1], p.prototypes);
  const nlohmann::json j = nlohmann::json::parse(ExplanationJson(e));
  EXPECT_EQ(j["predicted_class"], e.predicted_class);
  EXPECT_EQ(j["detectors"].size(), e.detectors.size());
  EXPECT_EQ(j["prototypes"].size(), e.prototypes.size());
  for (std::size_t i = 0; i < e.detectors.size(); ++i) {
    EXPECT_EQ(j["detectors"][i]["present"], e.detectors[i].present);
    EXPECT_EQ(j["detectors"][i]["location"].is_null(), !e.detectors[i].present);
  }
}

TEST(Explain, CropCoversReceptiveField) {
  const Pipeline& p = SharedPipeline();
  const Image& image = p.train.images[0];
  const PixelBox box = p.model.ReceptiveField(1, 2);
  const Image crop = CropReceptiveField(p.model, image, 1, 2);
  ASSERT_EQ(crop.height, box.bottom - box.top + 1);
  ASSERT_EQ(crop.width, box.right - box.left + 1);
  for (std::size_t y = 0; y < crop.height; ++y) {
    for (std::size_t x = 0; x < crop.width; ++x) {
      EXPECT_EQ(crop.at(y, x), image.at(box.top + y, box.left + x));
    }
  }
  Image small(1, 4, 4);
  EXPECT_THROW(CropReceptiveField(p.model, small, 3, 3), Error);
}

}  // namespace
}  // namespace codeood
