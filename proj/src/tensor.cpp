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

#include "codeood/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "codeood/error.hpp"

namespace codeood {

namespace {

std::size_t Product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  Require(Product(shape_) == data_.size(), Errc::kDimensionMismatch,
          "tensor shape " + ShapeString(shape_) + " does not hold " +
              std::to_string(data_.size()) + " elements");
}

std::string ShapeString(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

Map2D Correlate1x1(const FeatureMap& fmap, std::span<const double> kernel) {
  if (kernel.size() != fmap.depth) {
    const std::size_t fshape[] = {fmap.height, fmap.width, fmap.depth};
    const std::size_t kshape[] = {kernel.size()};
    Fail(Errc::kDimensionMismatch, "correlate_1x1: feature map " +
                                       ShapeString(fshape) + " vs kernel " +
                                       ShapeString(kshape));
  }
  Map2D out(fmap.height, fmap.width);
  for (std::size_t h = 0; h < fmap.height; ++h) {
    for (std::size_t w = 0; w < fmap.width; ++w) {
      out.at(h, w) = Dot(fmap.vector_at(h, w), kernel);
    }
  }
  return out;
}

Map2D Softmax2D(const Map2D& map) {
  Require(map.cells() > 0, Errc::kInvalidArgument, "softmax_2d: empty map");
  Map2D out(map.height, map.width);
  const double peak = *std::max_element(map.data.begin(), map.data.end());
  double total = 0.0;
  for (std::size_t i = 0; i < map.cells(); ++i) {
    out.data[i] = std::exp(map.data[i] - peak);
    total += out.data[i];
  }
  for (double& v : out.data) v /= total;
  out.normalized = true;
  return out;
}

Map2D Smooth3x3Uniform(const Map2D& map) {
  Map2D out(map.height, map.width);
  const auto rows = static_cast<std::ptrdiff_t>(map.height);
  const auto cols = static_cast<std::ptrdiff_t>(map.width);
  for (std::ptrdiff_t h = 0; h < rows; ++h) {
    for (std::ptrdiff_t w = 0; w < cols; ++w) {
      double sum = 0.0;
      for (std::ptrdiff_t dh = -1; dh <= 1; ++dh) {
        const std::ptrdiff_t y = h + dh;
        if (y < 0 || y >= rows) continue;
        for (std::ptrdiff_t dw = -1; dw <= 1; ++dw) {
          const std::ptrdiff_t x = w + dw;
          if (x < 0 || x >= cols) continue;
          sum += map.data[static_cast<std::size_t>(y * cols + x)];
        }
      }
      out.data[static_cast<std::size_t>(h * cols + w)] = sum;
    }
  }
  return out;
}

std::size_t ArgMax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> FiniteDiffGrad(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> params, double step) {
  Require(step > 0.0, Errc::kInvalidArgument, "finite_diff_grad: step must be > 0");
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = loss(probe);
    probe[i] = original - step;
    const double down = loss(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace codeood
