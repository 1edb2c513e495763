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

#include "codeood/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "codeood/error.hpp"

namespace codeood {

void ValidateImage(const Image& image) {
  Require(image.channels >= 1 && image.height >= 1 && image.width >= 1,
          Errc::kInvalidArgument, "image has an empty dimension");
  Require(image.pixels.size() == image.channels * image.height * image.width,
          Errc::kDimensionMismatch, "image pixel buffer does not match its shape");
  for (double v : image.pixels) {
    Require(v >= 0.0 && v <= 1.0, Errc::kInvalidArgument,
            "image pixel outside [0, 1]: " + std::to_string(v));
  }
}

Dataset SelectClasses(const Dataset& dataset, std::span<const std::uint32_t> classes,
                      bool relabel) {
  Dataset out;
  out.num_classes = relabel ? static_cast<std::uint32_t>(classes.size()) : dataset.num_classes;
  for (const Image& image : dataset.images) {
    if (!image.label) continue;
    const auto it = std::find(classes.begin(), classes.end(), *image.label);
    if (it == classes.end()) continue;
    Image copy = image;
    if (relabel) copy.label = static_cast<std::uint32_t>(it - classes.begin());
    out.images.push_back(std::move(copy));
  }
  return out;
}

std::vector<std::size_t> ClassCounts(const Dataset& dataset) {
  std::vector<std::size_t> counts(dataset.num_classes, 0);
  for (const Image& image : dataset.images) {
    if (image.label && *image.label < counts.size()) ++counts[*image.label];
  }
  return counts;
}

void WritePgm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), Errc::kIo, "cannot open '" + path + "' for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (std::size_t h = 0; h < image.height; ++h) {
    for (std::size_t w = 0; w < image.width; ++w) {
      const double v = std::clamp(image.at(h, w, 0), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  Require(static_cast<bool>(out), Errc::kIo, "write failed for '" + path + "'");
}

}  // namespace codeood
