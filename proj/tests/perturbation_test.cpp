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

#include "codeood/perturbation.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/confidence.hpp"
#include "codeood/error.hpp"
#include "codeood/rng.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace codeood {
namespace {

using testing::RandomImage;

Image Smooth(std::size_t size) {
  Image image(1, size, size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      image.at(y, x) = 0.5 + 0.4 * std::sin(static_cast<double>(x) / 3.0) *
                                 std::cos(static_cast<double>(y) / 4.0);
    }
  }
  return image;
}

Image Apply(const Image& image, PerturbationKind kind, double alpha, std::uint64_t seed = 0) {
  return ApplyPerturbation(image, PerturbationSpec{kind, alpha, seed});
}

Classifier TinyModel() {
  Architecture a;
  a.height = a.width = 8;
  a.conv1_channels = 2;
  a.feature_channels = 3;
  a.num_classes = 2;
  Classifier model = Classifier::Initialize(a, 4);
  model.Freeze();
  return model;
}

// First logit of the model; easy to recompute by hand.
class FirstLogitScorer final : public Scorer {
 public:
  std::string name() const override { return "first_logit"; }
  double Score(const Activations& act) const override { return act.logits[0]; }
};

TEST(Perturbation, IdentityMagnitudesAreBitExact) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Image image = RandomImage(rng, 1 + rng.Below(2), 5 + rng.Below(8), 5 + rng.Below(8));
    EXPECT_EQ(Apply(image, PerturbationKind::kBlur, 0.0), image);
    EXPECT_EQ(Apply(image, PerturbationKind::kBrightness, 1.0), image);
    EXPECT_EQ(Apply(image, PerturbationKind::kNoise, 0.0, 7), image);
    EXPECT_EQ(Apply(image, PerturbationKind::kRotationForth, 0.0), image);
    EXPECT_EQ(Apply(image, PerturbationKind::kRotationBack, 360.0), image);
  }
}

TEST(Perturbation, HalfTurnIsIndexFlip) {
  Rng rng(2);
  const Image image = RandomImage(rng, 2, 5, 7);
  for (PerturbationKind kind : {PerturbationKind::kRotationForth, PerturbationKind::kRotationBack}) {
    const Image out = Apply(image, kind, 180.0);
    for (std::size_t y = 0; y < 5; ++y) {
      for (std::size_t x = 0; x < 7; ++x) {
        for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(out.at(y, x, c), image.at(4 - y, 6 - x, c));
      }
    }
  }
}

TEST(Perturbation, QuarterTurnsAreCounterClockwise) {
  Image image(1, 3, 3);
  image.at(0, 2) = 1.0;  // top-right corner
  const Image ccw = Apply(image, PerturbationKind::kRotationForth, 90.0);
  EXPECT_EQ(ccw.at(0, 0), 1.0);  // moves to the top-left
  const Image cw = Apply(image, PerturbationKind::kRotationBack, 270.0);
  EXPECT_EQ(cw.at(2, 2), 1.0);  // moves to the bottom-right
  // Four quarter turns compose to the identity.
  Rng rng(3);
  const Image r = RandomImage(rng, 1, 6, 6);
  Image t = r;
  for (int k = 0; k < 4; ++k) t = Apply(t, PerturbationKind::kRotationForth, 90.0);
  EXPECT_EQ(t, r);
}

TEST(Perturbation, RotateBackUndoesRotateForth) {
  const Image image = Smooth(24);
  for (double a : {15.0, 40.0, 75.0, 130.0}) {
    const Image there = Apply(image, PerturbationKind::kRotationForth, a);
    const Image back = Apply(there, PerturbationKind::kRotationBack, 360.0 - a);
    double worst = 0.0;
    for (std::size_t y = 6; y < 18; ++y) {
      for (std::size_t x = 6; x < 18; ++x) {
        worst = std::max(worst, std::abs(back.at(y, x) - image.at(y, x)));
      }
    }
    EXPECT_LE(worst, 0.15) << "angle " << a;
  }
}

TEST(Perturbation, OutputsStayInUnitRange) {
  Rng rng(4);
  const Image image = RandomImage(rng, 1, 9, 9);
  for (PerturbationKind kind : AllKinds()) {
    const AlphaRange r = LegalRange(kind);
    for (int k = 0; k <= 6; ++k) {
      const double alpha = r.lo + (r.hi - r.lo) * k / 6.0;
      const Image out = Apply(image, kind, alpha, 11);
      for (double px : out.pixels) {
        EXPECT_GE(px, 0.0);
        EXPECT_LE(px, 1.0);
      }
      EXPECT_EQ(out.height, 9u);
    }
  }
}

TEST(Perturbation, NoiseIsSeededAndFullNoiseIgnoresInput) {
  Rng rng(5);
  const Image a = RandomImage(rng, 1, 6, 6);
  const Image b = RandomImage(rng, 1, 6, 6);
  EXPECT_EQ(Apply(a, PerturbationKind::kNoise, 0.4, 3), Apply(a, PerturbationKind::kNoise, 0.4, 3));
  EXPECT_NE(Apply(a, PerturbationKind::kNoise, 0.4, 3), Apply(a, PerturbationKind::kNoise, 0.4, 4));
  EXPECT_EQ(Apply(a, PerturbationKind::kNoise, 1.0, 9).pixels,
            Apply(b, PerturbationKind::kNoise, 1.0, 9).pixels);
}

TEST(Perturbation, BrightnessScales) {
  Rng rng(6);
  const Image image = RandomImage(rng, 1, 4, 4);
  const Image dim = Apply(image, PerturbationKind::kBrightness, 0.5);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    EXPECT_EQ(dim.pixels[i], 0.5 * image.pixels[i]);
  }
}

TEST(Perturbation, BlurMatchesKernelOracle) {
  Rng rng(7);
  const Image image = RandomImage(rng, 1, 5, 6);
  const double sigma = 1.3;
  const Image out = Apply(image, PerturbationKind::kBlur, sigma);
  const auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * (n - 1) - i : i); };
  double norm = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) norm += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
  }
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      double expected = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          expected += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)) / norm *
                      image.at(reflect(y + dy, 5), reflect(x + dx, 6));
        }
      }
      EXPECT_NEAR(out.at(y, x), expected, 1e-12);
    }
  }
  // A constant image is a fixed point.
  const Image flat(1, 4, 4, 0.3);
  for (double px : Apply(flat, PerturbationKind::kBlur, 4.0).pixels) EXPECT_NEAR(px, 0.3, 1e-15);
}

TEST(Perturbation, RangeErrors) {
  const Image image(1, 4, 4, 0.5);
  EXPECT_THROW(Apply(image, PerturbationKind::kBlur, -0.1), Error);
  EXPECT_THROW(Apply(image, PerturbationKind::kBlur, 10.5), Error);
  EXPECT_THROW(Apply(image, PerturbationKind::kBrightness, 0.05), Error);
  EXPECT_THROW(Apply(image, PerturbationKind::kRotationBack, 100.0), Error);
  EXPECT_THROW(Apply(image, PerturbationKind::kNoise, std::nan("")), Error);
}

TEST(Perturbation, KindNames) {
  for (PerturbationKind kind : AllKinds()) EXPECT_EQ(ParseKind(KindName(kind)), kind);
  EXPECT_THROW(ParseKind("jpeg"), Error);
  EXPECT_EQ(IntensityDirection(PerturbationKind::kBlur), 1);
  EXPECT_EQ(IntensityDirection(PerturbationKind::kNoise), 1);
  EXPECT_EQ(IntensityDirection(PerturbationKind::kRotationForth), 1);
  EXPECT_EQ(IntensityDirection(PerturbationKind::kBrightness), -1);
  EXPECT_EQ(IntensityDirection(PerturbationKind::kRotationBack), -1);
}

TEST(ExpectedConfidence, ConstantScorer) {
  const Classifier model = TinyModel();
  const auto constant = MakeScorer("constant", {});
  Rng rng(8);
  std::vector<Image> images;
  for (int n = 0; n < 4; ++n) images.push_back(RandomImage(rng, 1, 8, 8));
  for (PerturbationKind kind : AllKinds()) {
    const AlphaRange r = LegalRange(kind);
    EXPECT_EQ(ExpectedConfidence(model, *constant, images, {kind, 0.5 * (r.lo + r.hi), 1}), 0.5);
  }
}

TEST(ExpectedConfidence, MeanOfPerImageScores) {
  const Classifier model = TinyModel();
  const FirstLogitScorer scorer;
  Rng rng(9);
  std::vector<Image> images;
  for (int n = 0; n < 3; ++n) images.push_back(RandomImage(rng, 1, 8, 8));
  const PerturbationSpec identity{PerturbationKind::kBrightness, 1.0, 0};
  const double mean =
      (model.Logits(images[0])[0] + model.Logits(images[1])[0] + model.Logits(images[2])[0]) / 3.0;
  EXPECT_NEAR(ExpectedConfidence(model, scorer, images, identity), mean, 1e-12);

  // Noise uses a per-image stream derived from the spec seed.
  const PerturbationSpec noisy{PerturbationKind::kNoise, 0.5, 21};
  double sum = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    sum += model.Logits(Apply(images[n], PerturbationKind::kNoise, 0.5, MixSeed(21, n)))[0];
  }
  EXPECT_NEAR(ExpectedConfidence(model, scorer, images, noisy), sum / 3.0, 1e-12);
  EXPECT_THROW(ExpectedConfidence(model, scorer, {}, identity), Error);
}

TEST(Sweep, MonotoneAndDegenerateConfidences) {
  const SweepResult down =
      SweepFromConfidences("code", PerturbationKind::kBlur, {0.0, 1.0, 2.0, 3.0}, {0.9, 0.5, 0.4, 0.1});
  EXPECT_EQ(down.srcc, -1.0);
  EXPECT_EQ(down.intensity_srcc, -1.0);
  EXPECT_FALSE(down.degenerate);

  const SweepResult flat =
      SweepFromConfidences("constant", PerturbationKind::kBrightness, {0.1, 0.5, 1.0}, {0.5, 0.5, 0.5});
  EXPECT_EQ(flat.srcc, 0.0);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_FALSE(std::signbit(flat.intensity_srcc));

  // Brightness identity is alpha = 1: confidence rising with alpha means it
  // falls as the image darkens.
  const SweepResult bright =
      SweepFromConfidences("code", PerturbationKind::kBrightness, {0.1, 0.5, 1.0}, {0.2, 0.3, 0.8});
  EXPECT_EQ(bright.srcc, 1.0);
  EXPECT_EQ(bright.intensity_srcc, -1.0);
}

TEST(Sweep, ValidatesMagnitudes) {
  EXPECT_THROW(ValidateAlphas(PerturbationKind::kBlur, std::vector<double>{0.0, 1.0}), Error);
  EXPECT_THROW(ValidateAlphas(PerturbationKind::kBlur, std::vector<double>{0.0, 2.0, 1.0}), Error);
  EXPECT_THROW(ValidateAlphas(PerturbationKind::kBlur, std::vector<double>{0.0, 1.0, 1.0}), Error);
  EXPECT_THROW(ValidateAlphas(PerturbationKind::kNoise, std::vector<double>{0.0, 0.5, 2.0}), Error);
  EXPECT_NO_THROW(ValidateAlphas(PerturbationKind::kNoise, std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Sweep, DefaultGrids) {
  const struct {
    PerturbationKind kind;
    std::size_t points;
  } cases[] = {{PerturbationKind::kBlur, 11},
               {PerturbationKind::kNoise, 11},
               {PerturbationKind::kBrightness, 10},
               {PerturbationKind::kRotationForth, 13},
               {PerturbationKind::kRotationBack, 13}};
  for (const auto& c : cases) {
    const std::vector<double> grid = DefaultGrid(c.kind);
    ASSERT_EQ(grid.size(), c.points);
    const AlphaRange r = LegalRange(c.kind);
    EXPECT_DOUBLE_EQ(grid.front(), r.lo);
    EXPECT_DOUBLE_EQ(grid.back(), r.hi);
    const double step = (r.hi - r.lo) / static_cast<double>(c.points - 1);
    for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_NEAR(grid[k] - grid[k - 1], step, 1e-12);
    EXPECT_NO_THROW(ValidateAlphas(c.kind, grid));
  }
}

TEST(Sweep, SweepOverloadsAgree) {
  const Classifier model = TinyModel();
  const FirstLogitScorer first;
  const auto msp = MakeScorer("msp", {});
  Rng rng(10);
  std::vector<Image> images;
  for (int n = 0; n < 3; ++n) images.push_back(RandomImage(rng, 1, 8, 8));
  const std::vector<double> alphas = {0.0, 0.5, 1.0};
  const Scorer* scorers[] = {&first, msp.get()};
  const auto both = PerturbationSweep(model, scorers, images, PerturbationKind::kNoise, alphas, 5);
  ASSERT_EQ(both.size(), 2u);
  const SweepResult single =
      PerturbationSweep(model, *msp, images, PerturbationKind::kNoise, alphas, 5);
  EXPECT_EQ(both[1].expected_confidences, single.expected_confidences);
  EXPECT_EQ(both[1].scorer, "msp");
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    EXPECT_NEAR(both[0].expected_confidences[k],
                ExpectedConfidence(model, first, images, {PerturbationKind::kNoise, alphas[k], 5}),
                1e-12);
  }
}

TEST(Sweep, CsvRows) {
  const SweepResult r =
      SweepFromConfidences("code", PerturbationKind::kBrightness, {0.1, 0.5, 1.0}, {0.3, 0.2, 0.6});
  const std::string csv = SweepCsv(r);
  EXPECT_NE(csv.find("brightness,0.1,"), std::string::npos);
  EXPECT_NE(csv.find("brightness,srcc,0.5"), std::string::npos);
  EXPECT_NE(csv.find("brightness,intensity_srcc,-0.5"), std::string::npos);
}

}  // namespace
}  // namespace codeood
