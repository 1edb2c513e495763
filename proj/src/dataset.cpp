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

#include "codeood/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "codeood/error.hpp"
#include "codeood/rng.hpp"

namespace codeood {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

void PutBigEndian(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

constexpr std::size_t kMotif = 7;
constexpr std::size_t kMotifsPerClass = 2;
// Relative amplitude of the per-sample clutter gratings in the free corners.
constexpr double kClutterAmplitude = 0.75;
constexpr double kPi = 3.14159265358979323846;

// Grating motif: oriented sinusoid of a given period over a kMotif square.
struct Grating {
  double theta = 0.0;
  double period = 4.0;
};

// Motif bank: 8 orientations x 3 periods.
constexpr std::size_t kOrientations = 8;
constexpr std::array<double, 3> kPeriods = {2.5, 4.0, 6.5};
constexpr std::size_t kBankSize = kOrientations * kPeriods.size();

Grating BankEntry(std::size_t index) {
  return Grating{kPi * static_cast<double>(index % kOrientations) / kOrientations,
                 kPeriods[index / kOrientations]};
}

struct ClassTemplate {
  std::vector<Grating> motifs;
  std::vector<std::array<double, 2>> anchors;  // top-left (row, col)
  double blob_row = 0.0;
  double blob_col = 0.0;
  double blob_sigma = 0.0;
};

// Class c draws entries 2c and 2c + 1 of a seed-wide shuffle of the bank, so
// classes below kBankSize / 2 never share a motif. The two motifs sit in
// opposite corners, on the main or the anti diagonal.
ClassTemplate MakeTemplate(std::uint64_t seed, std::uint32_t cls, std::size_t size) {
  std::array<std::size_t, kBankSize> order;
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle(MixSeed(seed, 0x5a4e0000ULL));
  shuffle.Shuffle(std::span<std::size_t>(order));

  Rng rng(MixSeed(seed, 0x7e3a0000ULL + cls));
  ClassTemplate t;
  t.motifs.resize(kMotifsPerClass);
  t.anchors.resize(kMotifsPerClass);
  for (std::size_t m = 0; m < kMotifsPerClass; ++m) {
    t.motifs[m] = BankEntry(order[(kMotifsPerClass * cls + m) % order.size()]);
  }
  const double lo = 1.0;
  const double hi = static_cast<double>(size - kMotif) - 1.0;
  const bool anti = rng.Uniform() < 0.5;
  for (std::size_t m = 0; m < kMotifsPerClass; ++m) {
    const bool second = m % 2 == 1;
    t.anchors[m][0] = second ? hi : lo;
    t.anchors[m][1] = (second != anti) ? hi : lo;
  }
  t.blob_row = rng.Uniform() * static_cast<double>(size - 1);
  t.blob_col = rng.Uniform() * static_cast<double>(size - 1);
  t.blob_sigma = 2.0 + 2.0 * rng.Uniform();
  return t;
}

Image RenderSample(const ClassTemplate& t, std::uint32_t label, std::size_t size,
                   double noise, Rng& rng) {
  Image image(1, size, size);
  const double blob_amp = 0.2 + 0.15 * rng.Uniform();
  for (std::size_t h = 0; h < size; ++h) {
    for (std::size_t w = 0; w < size; ++w) {
      const double dr = static_cast<double>(h) - t.blob_row;
      const double dc = static_cast<double>(w) - t.blob_col;
      const double blob =
          blob_amp * std::exp(-(dr * dr + dc * dc) / (2.0 * t.blob_sigma * t.blob_sigma));
      image.at(h, w) = blob + rng.Normal(0.0, noise);
    }
  }
  auto draw = [&](const Grating& g, double row, double col, double amp_scale) {
    const long maxpos = static_cast<long>(size - kMotif);
    const auto jitter_r = static_cast<long>(rng.Below(3)) - 1;
    const auto jitter_c = static_cast<long>(rng.Below(3)) - 1;
    const long top = std::clamp(std::lround(row) + jitter_r, 0L, maxpos);
    const long left = std::clamp(std::lround(col) + jitter_c, 0L, maxpos);
    const double amplitude = amp_scale * (0.7 + 0.3 * rng.Uniform());
    const double phase = 2.0 * kPi * rng.Uniform();
    const double kr = std::sin(g.theta) * 2.0 * kPi / g.period;
    const double kc = std::cos(g.theta) * 2.0 * kPi / g.period;
    for (std::size_t r = 0; r < kMotif; ++r) {
      for (std::size_t c = 0; c < kMotif; ++c) {
        const long y = top + static_cast<long>(r);
        const long x = left + static_cast<long>(c);
        const double wave = 0.5 + 0.5 * std::cos(kr * static_cast<double>(r) +
                                                 kc * static_cast<double>(c) + phase);
        double& px = image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        px = std::max(px, amplitude * wave);
      }
    }
  };
  for (std::size_t m = 0; m < kMotifsPerClass; ++m) {
    draw(t.motifs[m], t.anchors[m][0], t.anchors[m][1], 1.0);
  }
  // Random bank gratings in the two free corners keep "empty corner" from
  // being a recurring class pattern.
  draw(BankEntry(rng.Below(kBankSize)), t.anchors[0][0], t.anchors[1][1], kClutterAmplitude);
  draw(BankEntry(rng.Below(kBankSize)), t.anchors[1][0], t.anchors[0][1], kClutterAmplitude);
  for (double& px : image.pixels) px = std::clamp(px, 0.0, 1.0);
  image.label = label;
  return image;
}

}  // namespace

Dataset ReadIdx(const std::string& images_path, const std::string& labels_path) {
  io::Reader images = io::Reader::FromFile(images_path);
  images.set_context("IDX image header");
  const std::uint32_t image_magic = images.U32BigEndian();
  Require(image_magic == kIdxImagesMagic, Errc::kFormat,
          "bad magic: '" + images_path + "' is not an IDX image file");
  const std::uint32_t count = images.U32BigEndian();
  const std::uint32_t rows = images.U32BigEndian();
  const std::uint32_t cols = images.U32BigEndian();
  Require(rows > 0 && cols > 0, Errc::kFormat, "IDX image file has an empty dimension");

  io::Reader labels = io::Reader::FromFile(labels_path);
  labels.set_context("IDX label header");
  const std::uint32_t label_magic = labels.U32BigEndian();
  Require(label_magic == kIdxLabelsMagic, Errc::kFormat,
          "bad magic: '" + labels_path + "' is not an IDX label file");
  const std::uint32_t label_count = labels.U32BigEndian();
  Require(label_count == count, Errc::kFormat,
          "IDX image/label counts differ: " + std::to_string(count) + " vs " +
              std::to_string(label_count));

  Dataset dataset;
  dataset.images.reserve(count);
  images.set_context("IDX image data");
  labels.set_context("IDX label data");
  for (std::uint32_t n = 0; n < count; ++n) {
    Image image(1, rows, cols);
    for (double& px : image.pixels) px = static_cast<double>(images.U8()) / 255.0;
    const std::uint32_t label = labels.U8();
    image.label = label;
    dataset.num_classes = std::max(dataset.num_classes, label + 1);
    dataset.images.push_back(std::move(image));
  }
  return dataset;
}

void WriteIdx(const Dataset& dataset, const std::string& images_path,
              const std::string& labels_path) {
  Require(!dataset.empty(), Errc::kInvalidArgument, "cannot write an empty IDX dataset");
  const Image& first = dataset.images.front();
  std::ofstream images(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  Require(images && labels, Errc::kIo, "cannot open IDX output files");
  PutBigEndian(images, kIdxImagesMagic);
  PutBigEndian(images, static_cast<std::uint32_t>(dataset.size()));
  PutBigEndian(images, static_cast<std::uint32_t>(first.height));
  PutBigEndian(images, static_cast<std::uint32_t>(first.width));
  PutBigEndian(labels, kIdxLabelsMagic);
  PutBigEndian(labels, static_cast<std::uint32_t>(dataset.size()));
  for (const Image& image : dataset.images) {
    Require(image.channels == 1 && image.height == first.height && image.width == first.width,
            Errc::kDimensionMismatch, "IDX output requires same-shape greyscale images");
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      images.put(static_cast<char>(
          static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0))));
    }
    labels.put(static_cast<char>(image.label.value_or(0)));
  }
  Require(images && labels, Errc::kIo, "IDX write failed");
}

SyntheticData GenerateSynthetic(const SyntheticParams& params) {
  Require(params.classes >= 1, Errc::kInvalidArgument, "synthetic data needs >= 1 class");
  Require(params.size >= 12, Errc::kInvalidArgument, "synthetic images must be at least 12x12");
  SyntheticData data;
  data.train.num_classes = params.classes;
  data.test.num_classes = params.classes;
  for (std::uint32_t c = 0; c < params.classes; ++c) {
    const ClassTemplate t = MakeTemplate(params.seed, c, params.size);
    Rng train_rng(MixSeed(params.seed, 0x51a20000ULL + 2ULL * c));
    Rng test_rng(MixSeed(params.seed, 0x51a20000ULL + 2ULL * c + 1));
    for (std::uint32_t n = 0; n < params.train_per_class; ++n) {
      data.train.images.push_back(
          RenderSample(t, c, params.size, params.background_noise, train_rng));
    }
    for (std::uint32_t n = 0; n < params.test_per_class; ++n) {
      data.test.images.push_back(
          RenderSample(t, c, params.size, params.background_noise, test_rng));
    }
  }
  return data;
}

Dataset UniformNoiseImages(std::size_t count, std::size_t channels, std::size_t height,
                           std::size_t width, std::uint64_t seed) {
  Rng rng(MixSeed(seed, 0x4015eULL));
  Dataset out;
  for (std::size_t n = 0; n < count; ++n) {
    Image image(channels, height, width);
    for (double& px : image.pixels) px = rng.Uniform();
    out.images.push_back(std::move(image));
  }
  return out;
}

}  // namespace codeood
