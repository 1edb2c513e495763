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

#ifndef CODEOOD_PERTURBATION_HPP_
#define CODEOOD_PERTURBATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/confidence.hpp"
#include "codeood/image.hpp"

namespace codeood {

enum class PerturbationKind { kBlur, kNoise, kBrightness, kRotationForth, kRotationBack };

struct AlphaRange {
  double lo;
  double hi;
};

// Blur [0, 10], Noise [0, 1], Brightness [0.1, 1], RotationForth [0, 180],
// RotationBack [180, 360].
AlphaRange LegalRange(PerturbationKind kind);
std::string_view KindName(PerturbationKind kind);
PerturbationKind ParseKind(std::string_view name);
const std::vector<PerturbationKind>& AllKinds();
// +1 when perturbation intensity grows with alpha (blur, noise,
// rotation_forth), -1 when the identity sits at the top of the range
// (brightness, rotation_back).
int IntensityDirection(PerturbationKind kind);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kBrightness;
  double alpha = 1.0;
  std::uint64_t seed = 0;  // Noise only

  void Validate() const;
};

// Blur: 3x3 Gaussian (sigma = alpha, normalized, reflect padding); alpha = 0
//   is the identity.
// Noise: (1 - alpha) x + alpha n, n ~ N(0.5, 0.25) clipped to [0, 1], seeded.
// Brightness: alpha x.
// Rotation: alpha degrees counter-clockwise about the image centre, bilinear,
//   zero fill. Multiples of 90 degrees (90/270 on square images only) use
//   exact index maps.
// Every output pixel is clipped to [0, 1].
Image ApplyPerturbation(const Image& image, const PerturbationSpec& spec);

// Mean scorer value over the perturbed images; the class argument is the
// model's prediction on each perturbed image. Image n uses noise seed
// MixSeed(spec.seed, n).
double ExpectedConfidence(const Classifier& model, const Scorer& scorer,
                          std::span<const Image> test_set, const PerturbationSpec& spec);

struct SweepResult {
  std::string scorer;
  PerturbationKind kind = PerturbationKind::kBrightness;
  std::vector<double> alphas;
  std::vector<double> expected_confidences;
  double srcc = 0.0;  // spearman(alphas, expected_confidences)
  // srcc against perturbation intensity: IntensityDirection(kind) * srcc.
  // Negative when confidence drops as the input moves away from identity.
  double intensity_srcc = 0.0;
  bool degenerate = false;  // constant confidences; srcc reported as 0
};

// Valid magnitudes: strictly increasing, inside the legal range, >= 3 values.
void ValidateAlphas(PerturbationKind kind, std::span<const double> alphas);

// Expected confidence of each scorer at every magnitude, then
// spearman(alphas, confidences). One forward pass per (alpha, image) feeds
// all scorers.
std::vector<SweepResult> PerturbationSweep(const Classifier& model,
                                           std::span<const Scorer* const> scorers,
                                           std::span<const Image> test_set, PerturbationKind kind,
                                           std::span<const double> alphas, std::uint64_t seed);
SweepResult PerturbationSweep(const Classifier& model, const Scorer& scorer,
                              std::span<const Image> test_set, PerturbationKind kind,
                              std::span<const double> alphas, std::uint64_t seed);

// Sweep from precomputed expected confidences.
SweepResult SweepFromConfidences(std::string scorer, PerturbationKind kind,
                                 std::vector<double> alphas, std::vector<double> confidences);

// Blur: 11 points in [0, 10]; Noise: 11 in [0, 1]; Brightness: 10 in
// [0.1, 1]; rotations: 13 in each half-range.
std::vector<double> DefaultGrid(PerturbationKind kind);

// kind,alpha,expected_confidence rows followed by kind,srcc,<value> and
// kind,intensity_srcc,<value> rows.
std::string SweepCsv(const SweepResult& sweep);

}  // namespace codeood

#endif  // CODEOOD_PERTURBATION_HPP_
