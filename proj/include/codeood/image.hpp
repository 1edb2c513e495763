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

#ifndef CODEOOD_IMAGE_HPP_
#define CODEOOD_IMAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace codeood {

// Image with pixels in [0, 1], stored [h][w][c].
struct Image {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
  std::optional<std::uint32_t> label;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), pixels(c * h * w, fill) {}

  double& at(std::size_t h, std::size_t w, std::size_t c = 0) {
    return pixels[(h * width + w) * channels + c];
  }
  double at(std::size_t h, std::size_t w, std::size_t c = 0) const {
    return pixels[(h * width + w) * channels + c];
  }

  bool operator==(const Image&) const = default;
};

// Throws unless every pixel lies in [0, 1] and the buffer matches the shape.
void ValidateImage(const Image& image);

struct Dataset {
  std::vector<Image> images;
  std::uint32_t num_classes = 0;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
};

// Keeps the images whose label is listed in `classes`. With `relabel`,
// classes[j] becomes label j and num_classes becomes classes.size().
Dataset SelectClasses(const Dataset& dataset, std::span<const std::uint32_t> classes,
                      bool relabel);

// Count of images per label, indexed 0..num_classes-1.
std::vector<std::size_t> ClassCounts(const Dataset& dataset);

// Portable greyscale dump (P5, 8-bit) of channel 0.
void WritePgm(const Image& image, const std::string& path);

}  // namespace codeood

#endif  // CODEOOD_IMAGE_HPP_
