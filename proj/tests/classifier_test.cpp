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

#include "codeood/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "codeood/detector.hpp"
#include "codeood/error.hpp"
#include "codeood/feature_set.hpp"
#include "codeood/rng.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace codeood {
namespace {

using testing::Blobs;
using testing::RandomImage;
using testing::TempDir;

Architecture SmallArch(HeadPooling pooling = HeadPooling::kMax2x2, std::size_t hidden = 0) {
  Architecture a;
  a.height = 8;
  a.width = 8;
  a.conv1_channels = 3;
  a.feature_channels = 4;
  a.hidden_units = hidden;
  a.num_classes = 3;
  a.head_pooling = pooling;
  return a;
}

double MaxRelativeError(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-6});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

void CheckGradients(const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  Classifier model = Classifier::Initialize(arch, seed);
  std::vector<Image> images;
  for (std::uint32_t n = 0; n < 4; ++n) {
    images.push_back(RandomImage(rng, arch.channels, arch.height, arch.width));
    images.back().label = n % arch.num_classes;
  }
  std::vector<const Image*> batch;
  for (const Image& image : images) batch.push_back(&image);

  std::vector<Tensor> analytic;
  model.LossAndGradient(batch, &analytic);
  for (std::size_t p = 0; p < model.parameters().size(); ++p) {
    const std::vector<double> start(model.parameters()[p].data().begin(),
                                    model.parameters()[p].data().end());
    const auto loss = [&](std::span<const double> values) {
      auto dst = model.mutable_parameters()[p].data();
      std::copy(values.begin(), values.end(), dst.begin());
      return model.LossAndGradient(batch, nullptr);
    };
    const std::vector<double> numeric = FiniteDiffGrad(loss, start, 1e-5);
    loss(start);
    EXPECT_LE(MaxRelativeError(analytic[p].data(), numeric), 1e-4)
        << model.parameter_names()[p];
  }
}

TEST(Classifier, ParameterLayout) {
  const Classifier plain = Classifier::Initialize(SmallArch(), 1);
  EXPECT_EQ(plain.parameter_names(),
            (std::vector<std::string>{"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
                                      "out.weight", "out.bias"}));
  EXPECT_EQ(plain.parameters()[4].shape(), (std::vector<std::size_t>{3, 16}));
  const Classifier hidden = Classifier::Initialize(SmallArch(HeadPooling::kMax2x2, 5), 1);
  EXPECT_EQ(hidden.parameters().size(), 8u);
  EXPECT_EQ(hidden.parameter_names()[4], "fc.weight");
  const Classifier global = Classifier::Initialize(SmallArch(HeadPooling::kGlobalMax), 1);
  EXPECT_EQ(global.parameters()[4].shape(), (std::vector<std::size_t>{3, 4}));
}

TEST(Classifier, InitializeRejectsBadArchitectures) {
  Architecture a = SmallArch();
  a.num_classes = 1;
  EXPECT_THROW(Classifier::Initialize(a, 0), Error);
  a = SmallArch();
  a.height = 2;
  EXPECT_THROW(Classifier::Initialize(a, 0), Error);
}

TEST(Classifier, GradientsMatchFiniteDifferences) {
  CheckGradients(SmallArch(), 3);
  CheckGradients(SmallArch(HeadPooling::kMax2x2, 6), 4);
  CheckGradients(SmallArch(HeadPooling::kGlobalMax), 5);
}

TEST(Classifier, InferenceRequiresFrozenModel) {
  Classifier model = Classifier::Initialize(SmallArch(), 0);
  const Image image(1, 8, 8, 0.5);
  EXPECT_THROW(model.Logits(image), Error);
  model.Freeze();
  EXPECT_NO_THROW(model.Logits(image));
  try {
    model.mutable_parameters();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kState);
  }
}

TEST(Classifier, ShapeMismatchRejected) {
  Classifier model = Classifier::Initialize(SmallArch(), 0);
  model.Freeze();
  EXPECT_THROW(model.ExtractFeatures(Image(1, 9, 8)), Error);
  EXPECT_THROW(model.ExtractFeatures(Image(2, 8, 8)), Error);
}

TEST(Classifier, ZeroImageZeroBiasGivesZeroFeatures) {
  Classifier model = Classifier::Initialize(SmallArch(), 7);
  for (std::size_t p : {1u, 3u}) {
    for (double& b : model.mutable_parameters()[p].data()) b = 0.0;
  }
  model.Freeze();
  const FeatureMap f = model.ExtractFeatures(Image(1, 8, 8, 0.0));
  for (double v : f.data) EXPECT_EQ(v, 0.0);
}

TEST(Classifier, FeatureShapeAndHeadConsistency) {
  Rng rng(2);
  for (HeadPooling pooling : {HeadPooling::kMax2x2, HeadPooling::kGlobalMax}) {
    Classifier model = Classifier::Initialize(SmallArch(pooling, 5), 9);
    model.Freeze();
    const Architecture& a = model.architecture();
    for (int trial = 0; trial < 5; ++trial) {
      const Image image = RandomImage(rng, 1, 8, 8);
      const FeatureMap f = model.ExtractFeatures(image);
      EXPECT_EQ(f.height, a.feature_height());
      EXPECT_EQ(f.width, a.feature_width());
      EXPECT_EQ(f.depth, a.feature_channels);
      const std::vector<double> logits = model.Logits(image);
      ASSERT_EQ(logits.size(), 3u);
      const std::vector<double> head = model.HeadLogits(f);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(head[c], logits[c], 1e-12);
      EXPECT_LT(model.Predict(image), 3u);
      const Activations act = model.Forward(image);
      EXPECT_EQ(act.features, f);
      EXPECT_EQ(act.logits, logits);
      EXPECT_EQ(act.penultimate.size(), a.penultimate_size());
    }
  }
}

TEST(Classifier, SeparableBlobsReachHighAccuracy) {
  const Dataset train = Blobs(50, 1);
  ClassifierConfig config;
  config.seed = 3;
  Classifier model = TrainClassifier(train, config);
  EXPECT_FALSE(model.frozen());
  model.Freeze();
  EXPECT_GE(Accuracy(model, train), 0.95);
  EXPECT_GE(Accuracy(model, Blobs(50, 2)), 0.95);
}

TEST(Classifier, SingleBatchOverfit) {
  Rng rng(4);
  Dataset train;
  train.num_classes = 2;
  for (std::uint32_t n = 0; n < 16; ++n) {
    train.images.push_back(RandomImage(rng, 1, 8, 8));
    train.images.back().label = n % 2;
  }
  ClassifierConfig config;
  config.batch_size = 0;
  config.epochs = 200;
  config.seed = 1;
  Classifier model = TrainClassifier(train, config);
  model.Freeze();
  EXPECT_EQ(Accuracy(model, train), 1.0);
}

TEST(Classifier, FullBatchLossNonIncreasing) {
  Rng rng(5);
  Dataset train;
  train.num_classes = 2;
  for (std::uint32_t n = 0; n < 16; ++n) {
    train.images.push_back(RandomImage(rng, 1, 8, 8));
    train.images.back().label = n % 2;
  }
  ClassifierConfig config;
  config.batch_size = 0;
  config.epochs = 60;
  config.momentum = 0.0;
  config.learning_rate = 0.02;
  std::vector<double> losses;
  TrainClassifier(train, config, &losses);
  ASSERT_EQ(losses.size(), 60u);
  for (std::size_t e = 1; e < losses.size(); ++e) EXPECT_LE(losses[e], losses[e - 1] + 1e-12);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Classifier, TrainingIsDeterministic) {
  const Dataset train = Blobs(10, 6);
  ClassifierConfig config;
  config.epochs = 3;
  config.seed = 11;
  const Classifier a = TrainClassifier(train, config);
  const Classifier b = TrainClassifier(train, config);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.Checksum(), b.Checksum());
  config.seed = 12;
  EXPECT_NE(TrainClassifier(train, config).Checksum(), a.Checksum());
}

TEST(Classifier, TrainingRejectsBadData) {
  EXPECT_THROW(TrainClassifier(Dataset{}, ClassifierConfig{}), Error);
  Dataset d = Blobs(2, 1);
  d.images[1].label = 5;
  EXPECT_THROW(TrainClassifier(d, ClassifierConfig{}), Error);
  d.images[1].label.reset();
  EXPECT_THROW(TrainClassifier(d, ClassifierConfig{}), Error);
}

TEST(Classifier, FrozenModelUntouchedByDetectorTraining) {
  ClassifierConfig config;
  config.epochs = 2;
  Classifier model = TrainClassifier(Blobs(8, 2), config);
  model.Freeze();
  const std::uint64_t before = model.Checksum();
  const FeatureSet features = ExtractFeatureSet(model, Blobs(8, 3));
  DetectorTrainConfig dc;
  dc.epochs = 3;
  TrainDetectors(features, DetectorParams{}, dc);
  EXPECT_EQ(model.Checksum(), before);
}

TEST(Classifier, SaveLoadRoundTrip) {
  TempDir dir("classifier");
  for (HeadPooling pooling : {HeadPooling::kMax2x2, HeadPooling::kGlobalMax}) {
    Classifier model = Classifier::Initialize(SmallArch(pooling, 3), 5);
    model.Freeze();
    model.Save(dir.file("m.bin"));
    const Classifier loaded = Classifier::Load(dir.file("m.bin"));
    EXPECT_TRUE(loaded.frozen());
    EXPECT_EQ(loaded.architecture(), model.architecture());
    EXPECT_EQ(loaded.parameters(), model.parameters());
    EXPECT_EQ(loaded.Checksum(), model.Checksum());
  }
}

TEST(Classifier, LoadRejectsCorruptFiles) {
  TempDir dir("classifier_bad");
  Classifier model = Classifier::Initialize(SmallArch(), 5);
  model.Save(dir.file("m.bin"));
  std::ifstream in(dir.file("m.bin"), std::ios::binary);
  std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  auto write = [&](const std::string& name, const std::vector<char>& data) {
    std::ofstream(dir.file(name), std::ios::binary)
        .write(data.data(), static_cast<std::streamsize>(data.size()));
    return dir.file(name);
  };
  std::vector<char> truncated(bytes.begin(), bytes.end() - 4);
  EXPECT_THROW(Classifier::Load(write("t.bin", truncated)), Error);
  std::vector<char> magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(Classifier::Load(write("m2.bin", magic)), Error);
  // Head pooling field: 8-byte magic then seven u32 fields.
  std::vector<char> pooling = bytes;
  pooling[8 + 7 * 4] = 9;
  EXPECT_THROW(Classifier::Load(write("p.bin", pooling)), Error);
}

TEST(Classifier, ReceptiveFieldArithmetic) {
  Architecture a = SmallArch();
  a.height = 16;
  a.width = 16;
  const Classifier model = Classifier::Initialize(a, 0);
  // Each cut cell sees input rows/cols [2h - 3, 2h + 4], clipped.
  const PixelBox corner = model.ReceptiveField(0, 0);
  EXPECT_EQ(corner.top, 0u);
  EXPECT_EQ(corner.left, 0u);
  EXPECT_EQ(corner.bottom, 4u);
  EXPECT_EQ(corner.right, 4u);
  const PixelBox inner = model.ReceptiveField(3, 5);
  EXPECT_EQ(inner.top, 3u);
  EXPECT_EQ(inner.bottom, 10u);
  EXPECT_EQ(inner.left, 7u);
  EXPECT_EQ(inner.right, 14u);
  const PixelBox edge = model.ReceptiveField(7, 7);
  EXPECT_EQ(edge.bottom, 15u);
  EXPECT_EQ(edge.right, 15u);
}

}  // namespace
}  // namespace codeood
