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

#ifndef CODEOOD_TENSOR_HPP_
#define CODEOOD_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace codeood {

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string ShapeString(std::span<const std::size_t> shape);

// H x W map of doubles. `normalized` marks maps that are probability
// distributions over their cells (softmax outputs).
struct Map2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;
  bool normalized = false;

  Map2D() = default;
  Map2D(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), data(h * w, fill) {}

  double& at(std::size_t h, std::size_t w) { return data[h * width + w]; }
  double at(std::size_t h, std::size_t w) const { return data[h * width + w]; }
  std::size_t cells() const { return data.size(); }

  bool operator==(const Map2D&) const = default;
};

// Block of D-dimensional activation vectors laid out [h][w][d].
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t d, double fill = 0.0)
      : height(h), width(w), depth(d), data(h * w * d, fill) {}

  std::span<const double> vector_at(std::size_t h, std::size_t w) const {
    return std::span<const double>(data).subspan((h * width + w) * depth, depth);
  }
  std::span<double> vector_at(std::size_t h, std::size_t w) {
    return std::span<double>(data).subspan((h * width + w) * depth, depth);
  }
  std::size_t cells() const { return height * width; }

  bool operator==(const FeatureMap&) const = default;
};

double Dot(std::span<const double> a, std::span<const double> b);

// out[h][w] = <fmap[h][w][:], kernel>.
Map2D Correlate1x1(const FeatureMap& fmap, std::span<const double> kernel);

// Max-subtracted softmax over all cells; the result is tagged normalized.
Map2D Softmax2D(const Map2D& map);

// Sum over each zero-padded 3x3 neighbourhood.
Map2D Smooth3x3Uniform(const Map2D& map);

// Row-major index of the first maximum.
std::size_t ArgMax(std::span<const double> values);

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
std::vector<double> FiniteDiffGrad(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> params, double step);

}  // namespace codeood

#endif  // CODEOOD_TENSOR_HPP_
