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

#ifndef CODEOOD_CONFIDENCE_HPP_
#define CODEOOD_CONFIDENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/detector.hpp"
#include "codeood/feature_set.hpp"

namespace codeood {

constexpr double kDefaultSigmaFloor = 1e-6;

// Per-detector mean and standard deviation of the maximum correlation score
// over the training samples of the detector's class.
struct CalibrationStats {
  std::uint32_t num_classes = 0;
  std::size_t per_class = 0;
  std::vector<double> mu;     // [class][detector]
  std::vector<double> sigma;  // [class][detector], >= sigma_floor
  double sigma_floor = kDefaultSigmaFloor;

  double mean(std::uint32_t cls, std::size_t i) const { return mu[cls * per_class + i]; }
  double stddev(std::uint32_t cls, std::size_t i) const { return sigma[cls * per_class + i]; }

  // "CODECS01" | u32 N | u32 p | N*p f64 mu | N*p f64 sigma.
  void Save(const std::string& path) const;
  static CalibrationStats Load(const std::string& path);

  bool operator==(const CalibrationStats&) const = default;
};

// Streaming mean/variance with an associative merge (Chan et al.).
class RunningStats {
 public:
  void Add(double x);
  void Merge(const RunningStats& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  // Sample standard deviation (n - 1 divisor); 0 below two samples.
  double stddev() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct CorrelationPeak {
  double value = 0.0;
  std::size_t h = 0;
  std::size_t w = 0;
};

// H_i^c(x): maximum raw correlation of kernel (c, i) over the map, with the
// first maximal cell in row-major order.
CorrelationPeak MaxCorrelationPeak(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                                   const FeatureMap& fmap);
double MaxCorrelation(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                      const FeatureMap& fmap);

CalibrationStats Calibrate(const DetectorBank& bank, const FeatureSet& train,
                           double sigma_floor = kDefaultSigmaFloor);

// Logistic sigmoid kept strictly inside (0, 1).
double Sigmoid(double z);

// C_i^c(x) = sig((H_i^c(x) - mu) / sigma).
double DetectorConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                          std::uint32_t cls, std::size_t i, const FeatureMap& fmap);
// C^c(x): mean of the class's detector confidences.
double ClassConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                       std::uint32_t cls, const FeatureMap& fmap);

enum class CodeMode { kWeighted, kTop1 };

std::vector<double> SoftmaxProbabilities(std::span<const double> logits);

// Weighted: sum_c C^c(x) softmax(f(x))_c. Top1: C^argmax(x).
double CodeConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                      const FeatureMap& features, std::span<const double> logits, CodeMode mode);

struct ConfidenceScore {
  double value = 0.0;
  std::string method;
  std::optional<CodeMode> mode;
};

ConfidenceScore CodeConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                               const Classifier& model, const Image& image, CodeMode mode);

enum class Baseline { kMsp, kMaxLogit, kEnergy };

// msp = max softmax, maxlogit = max logit, energy = log sum exp(logits).
// Larger means more in-distribution for all three.
double BaselineScore(Baseline method, std::span<const double> logits);

// Per-class [min, max] of every monitored neuron over the class's training
// images. Monitored neurons: the flattened feature cut followed by the
// input of the last dense layer.
struct FnrdRanges {
  std::uint32_t num_classes = 0;
  std::size_t width = 0;
  std::vector<double> lo;  // [class][neuron]
  std::vector<double> hi;
  std::vector<std::uint8_t> calibrated;  // per class

  // "CODEFN01" | u32 N | u32 width | N u8 calibrated | N*width f64 lo | hi.
  void Save(const std::string& path) const;
  static FnrdRanges Load(const std::string& path);
};

std::vector<double> MonitoredActivations(const Activations& act);
FnrdRanges FnrdCalibrate(const Classifier& model, const Dataset& train);
// 1 - fraction of monitored neurons outside the class's range.
double FnrdScore(const FnrdRanges& ranges, std::uint32_t cls, std::span<const double> monitored);
// Uses the predicted class of `image`.
double FnrdScore(const Classifier& model, const FnrdRanges& ranges, const Image& image);

// Uniform interface over every OoD score: larger = more in-distribution.
// A scorer reads one forward pass, so several scorers can share it.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual double Score(const Activations& act) const = 0;
};

struct ScorerResources {
  const DetectorBank* bank = nullptr;
  const CalibrationStats* stats = nullptr;
  const FnrdRanges* fnrd = nullptr;
};

// Names: code, code_top1, msp, maxlogit, energy, fnrd, constant.
std::unique_ptr<Scorer> MakeScorer(std::string_view name, const ScorerResources& resources);
const std::vector<std::string>& ScorerNames();

// scores[s][n] = scorers[s] applied to image n.
std::vector<std::vector<double>> ScoreImages(const Classifier& model,
                                             std::span<const Scorer* const> scorers,
                                             std::span<const Image> images);

}  // namespace codeood

#endif  // CODEOOD_CONFIDENCE_HPP_
