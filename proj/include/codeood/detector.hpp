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

#ifndef CODEOOD_DETECTOR_HPP_
#define CODEOOD_DETECTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codeood/feature_set.hpp"
#include "codeood/tensor.hpp"

namespace codeood {

struct DetectorParams {
  std::size_t per_class = 4;  // p
  double lambda_u = 1.0;      // weight of the unicity term
  double threshold = 1.0;     // t in the unicity hinge
};

// Bank of per-class pattern detectors: num_classes x p kernels of length D,
// stored [class][detector][d].
class DetectorBank {
 public:
  DetectorBank() = default;
  DetectorBank(std::uint32_t num_classes, std::size_t depth, const DetectorParams& params);

  // Kernels drawn i.i.d. N(0, 1/D). Class c uses its own stream derived from
  // (seed, c), so a class's initial kernels do not depend on other classes.
  static DetectorBank Random(std::uint32_t num_classes, std::size_t depth,
                             const DetectorParams& params, std::uint64_t seed);
  static std::vector<double> InitialClassKernels(std::uint32_t cls, std::size_t depth,
                                                 std::size_t per_class, std::uint64_t seed);

  std::uint32_t num_classes() const { return num_classes_; }
  std::size_t per_class() const { return per_class_; }
  std::size_t depth() const { return depth_; }
  double lambda_u() const { return lambda_u_; }
  double threshold() const { return threshold_; }
  void set_lambda_u(double v) { lambda_u_ = v; }

  std::span<const double> kernel(std::uint32_t cls, std::size_t i) const;
  std::span<double> kernel(std::uint32_t cls, std::size_t i);
  std::span<const double> class_block(std::uint32_t cls) const;
  std::span<double> class_block(std::uint32_t cls);
  std::span<const double> data() const { return kernels_; }
  std::span<double> data() { return kernels_; }

  // "CODEDB01" | u32 N | u32 p | u32 D | f64 lambda_u | f64 t | N*p*D f64.
  void Save(const std::string& path) const;
  static DetectorBank Load(const std::string& path);

  bool operator==(const DetectorBank&) const = default;

 private:
  void CheckIndex(std::uint32_t cls, std::size_t i) const;

  std::uint32_t num_classes_ = 0;
  std::size_t per_class_ = 0;
  std::size_t depth_ = 0;
  double lambda_u_ = 1.0;
  double threshold_ = 1.0;
  std::vector<double> kernels_;
};

// One (feature map, label) training pair.
struct LabeledFeatures {
  const FeatureMap* features = nullptr;
  std::uint32_t label = 0;
};

std::vector<LabeledFeatures> AsBatch(const FeatureSet& set);

// softmax_2d(correlate_1x1(fmap, k_i^c)).
Map2D ActivationMap(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                    const FeatureMap& fmap);
// Sum of the class's p activation maps.
Map2D CumulativeMap(const DetectorBank& bank, std::uint32_t cls, const FeatureMap& fmap);

// -sum over samples and the label's detectors of max(smooth_3x3(P_i)).
double LocalityLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch);
// sum over samples of max(0, max(S^label) - t).
double UnicityLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch);
double TotalLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch);

// d TotalLoss / d kernels, laid out like bank.data(). Blocks of classes that
// do not occur in the batch are exactly zero. Max ties resolve to the first
// cell in row-major order.
std::vector<double> GradDetectors(const DetectorBank& bank,
                                  std::span<const LabeledFeatures> batch);

struct DetectorTrainConfig {
  double learning_rate = 5e-4;
  double weight_decay = 1e-5;
  std::size_t epochs = 200;
  // 0 selects full-batch mode (one update per epoch over the whole class).
  std::size_t batch_size = 32;
  double rho = 0.99;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Per-class workers; 0 uses WorkerCount().
  std::size_t threads = 0;
};

// RMSprop with decoupled weight decay:
//   E  <- rho E + (1 - rho) g^2
//   k  <- k - lr g / sqrt(E + eps) - lr wd k
//
// Each class trains independently on its own samples. `epoch_losses`, when
// given, receives for every class the TotalLoss of that class's samples after
// each epoch.
DetectorBank TrainDetectors(const FeatureSet& set, const DetectorParams& params,
                            const DetectorTrainConfig& config,
                            std::vector<std::vector<double>>* epoch_losses = nullptr);

// Trains one class on `samples` (all with label `cls`) and returns its p x D
// kernel block. TrainDetectors is this function run for every class.
std::vector<double> TrainClassDetectors(std::uint32_t cls, std::span<const LabeledFeatures> samples,
                                        std::size_t depth, const DetectorParams& params,
                                        const DetectorTrainConfig& config,
                                        std::vector<double>* epoch_losses = nullptr);

}  // namespace codeood

#endif  // CODEOOD_DETECTOR_HPP_
