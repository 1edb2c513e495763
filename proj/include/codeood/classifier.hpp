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

#ifndef CODEOOD_CLASSIFIER_HPP_
#define CODEOOD_CLASSIFIER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codeood/image.hpp"
#include "codeood/tensor.hpp"

namespace codeood {

// conv3x3(same)+ReLU -> maxpool2 -> conv3x3(same)+ReLU [feature cut] ->
// pool -> flatten -> [FC hidden + ReLU] -> FC num_classes, where the head
// pool is a 2x2 max pool or a global max pool over the whole map.
//
// The feature cut is the output of the last convolution, so f = l o v with
// v = everything up to the cut and l = last pooling plus the dense layers.
enum class HeadPooling : std::uint32_t { kMax2x2 = 0, kGlobalMax = 1 };

struct Architecture {
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t conv1_channels = 8;
  std::size_t feature_channels = 16;
  std::size_t hidden_units = 0;
  std::uint32_t num_classes = 2;
  HeadPooling head_pooling = HeadPooling::kMax2x2;

  std::size_t feature_height() const { return height / 2; }
  std::size_t feature_width() const { return width / 2; }
  std::size_t pooled_height() const {
    return head_pooling == HeadPooling::kGlobalMax ? 1 : feature_height() / 2;
  }
  std::size_t pooled_width() const {
    return head_pooling == HeadPooling::kGlobalMax ? 1 : feature_width() / 2;
  }
  std::size_t flat_size() const { return pooled_height() * pooled_width() * feature_channels; }
  // Width of the input to the final dense layer.
  std::size_t penultimate_size() const { return hidden_units ? hidden_units : flat_size(); }

  bool operator==(const Architecture&) const = default;
};

// Inclusive pixel rectangle in input-image coordinates.
struct PixelBox {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t bottom = 0;
  std::size_t right = 0;
};

// Everything one inference pass yields: v(x), the input of the last dense
// layer, and f(x).
struct Activations {
  FeatureMap features;
  std::vector<double> penultimate;
  std::vector<double> logits;
};

struct ClassifierConfig {
  std::size_t conv1_channels = 8;
  std::size_t feature_channels = 16;
  std::size_t hidden_units = 0;
  HeadPooling head_pooling = HeadPooling::kMax2x2;
  std::size_t epochs = 20;
  // 0 selects full-batch gradient descent.
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

class Classifier {
 public:
  static Classifier Initialize(const Architecture& arch, std::uint64_t seed);
  static Classifier Load(const std::string& path);
  void Save(const std::string& path) const;

  const Architecture& architecture() const { return arch_; }
  bool frozen() const { return frozen_; }
  void Freeze() { frozen_ = true; }

  // conv1.weight, conv1.bias, conv2.weight, conv2.bias, [fc.weight, fc.bias],
  // out.weight, out.bias.
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  // Throws kState on a frozen model.
  std::vector<Tensor>& mutable_parameters();
  // FNV-1a over the raw parameter bytes.
  std::uint64_t Checksum() const;

  // Inference entry points; all require a frozen model.
  Activations Forward(const Image& image) const;
  FeatureMap ExtractFeatures(const Image& image) const;
  std::vector<double> Logits(const Image& image) const;
  // l(v): logits recomputed from a feature-cut map.
  std::vector<double> HeadLogits(const FeatureMap& features) const;
  std::uint32_t Predict(const Image& image) const;

  // Mean softmax cross-entropy over `batch` and its gradient per parameter
  // tensor; does not mutate the model and works on unfrozen models.
  double LossAndGradient(std::span<const Image* const> batch,
                         std::vector<Tensor>* gradients) const;

  // Theoretical receptive field of feature-cut cell (h, w), clipped.
  PixelBox ReceptiveField(std::size_t h, std::size_t w) const;

 private:
  struct Trace;

  void CheckInput(const Image& image) const;
  void RequireFrozen() const;
  void RunForward(const Image& image, Trace& trace) const;
  void RunHead(Trace& trace) const;

  Architecture arch_;
  std::vector<Tensor> params_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

// Mini-batch SGD with momentum on softmax cross-entropy. The returned model
// is not frozen. `epoch_losses`, when given, receives the mean batch loss
// (evaluated before each update) of every epoch.
Classifier TrainClassifier(const Dataset& train, const ClassifierConfig& config,
                           std::vector<double>* epoch_losses = nullptr);

double Accuracy(const Classifier& model, const Dataset& dataset);

}  // namespace codeood

#endif  // CODEOOD_CLASSIFIER_HPP_
