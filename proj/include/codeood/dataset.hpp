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

#ifndef CODEOOD_DATASET_HPP_
#define CODEOOD_DATASET_HPP_

#include <cstdint>
#include <string>

#include "codeood/image.hpp"

namespace codeood {

// MNIST-style IDX files: images with big-endian magic 0x00000803 and dims
// (count, rows, cols), labels with magic 0x00000801 and dim (count). Pixel
// bytes are scaled by 1/255. num_classes is max label + 1.
Dataset ReadIdx(const std::string& images_path, const std::string& labels_path);
void WriteIdx(const Dataset& dataset, const std::string& images_path,
              const std::string& labels_path);

struct SyntheticParams {
  std::uint32_t classes = 4;
  std::uint32_t size = 16;
  std::uint32_t train_per_class = 200;
  std::uint32_t test_per_class = 50;
  double background_noise = 0.05;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
};

// Greyscale images built from per-class templates: two 7x7 sinusoidal
// gratings in opposite corners (jittered by one pixel per sample), weaker
// random gratings in the other two corners, a faint Gaussian blob and
// background noise. Gratings come from a bank of 24
// orientation/period pairs, and the first 12 classes never share one. A class
// template depends only on (seed, class id), so generating more classes
// appends new classes without changing the existing ones; extra classes
// serve as held-out OoD sources.
SyntheticData GenerateSynthetic(const SyntheticParams& params);

// i.i.d. uniform pixels; labels unset.
Dataset UniformNoiseImages(std::size_t count, std::size_t channels, std::size_t height,
                           std::size_t width, std::uint64_t seed);

}  // namespace codeood

#endif  // CODEOOD_DATASET_HPP_
