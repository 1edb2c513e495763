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

#include "codeood/detector.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "codeood/error.hpp"
#include "codeood/parallel.hpp"
#include "codeood/rng.hpp"

namespace codeood {

namespace {

constexpr std::string_view kMagic("CODEDB01", 8);

struct SampleTerms {
  double locality = 0.0;
  double unicity = 0.0;
};

// Loss terms of one sample against one class block (p kernels of length D).
// When `grad` is non-null the gradient of locality + lambda * unicity with
// respect to the block is accumulated into it.
SampleTerms EvaluateSample(std::span<const double> block, std::size_t p, std::size_t depth,
                           double lambda_u, double threshold, const FeatureMap& fmap,
                           double* grad) {
  Require(fmap.depth == depth, Errc::kDimensionMismatch,
          "feature depth " + std::to_string(fmap.depth) + " does not match detector depth " +
              std::to_string(depth));
  const std::size_t cells = fmap.cells();
  std::vector<Map2D> prob(p);
  std::vector<std::size_t> peak(p);
  std::vector<double> peak_mass(p);
  Map2D cumulative(fmap.height, fmap.width);
  SampleTerms terms;
  for (std::size_t i = 0; i < p; ++i) {
    prob[i] = Softmax2D(Correlate1x1(fmap, block.subspan(i * depth, depth)));
    const Map2D smoothed = Smooth3x3Uniform(prob[i]);
    peak[i] = ArgMax(smoothed.data);
    peak_mass[i] = smoothed.data[peak[i]];
    terms.locality -= peak_mass[i];
    for (std::size_t j = 0; j < cells; ++j) cumulative.data[j] += prob[i].data[j];
  }
  const std::size_t top = ArgMax(cumulative.data);
  const double excess = cumulative.data[top] - threshold;
  const bool hinge_active = excess > 0.0;
  if (hinge_active) terms.unicity = excess;
  if (!grad) return terms;

  const auto rows = static_cast<std::ptrdiff_t>(fmap.height);
  const auto cols = static_cast<std::ptrdiff_t>(fmap.width);
  std::vector<double> dz(cells);
  for (std::size_t i = 0; i < p; ++i) {
    const std::vector<double>& pi = prob[i].data;
    // Locality: d(-sum_{j in N(m)} P_j)/dz_j = -P_j (1[j in N(m)] - s).
    const auto mh = static_cast<std::ptrdiff_t>(peak[i]) / cols;
    const auto mw = static_cast<std::ptrdiff_t>(peak[i]) % cols;
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(cells); ++j) {
      const std::ptrdiff_t jh = j / cols;
      const std::ptrdiff_t jw = j % cols;
      const bool inside = std::abs(jh - mh) <= 1 && std::abs(jw - mw) <= 1 && jh < rows;
      dz[static_cast<std::size_t>(j)] = -pi[static_cast<std::size_t>(j)] *
                                        ((inside ? 1.0 : 0.0) - peak_mass[i]);
    }
    // Unicity: d P_m / dz_j = P_m (1[j = m] - P_j).
    if (hinge_active && lambda_u != 0.0) {
      const double pm = pi[top];
      for (std::size_t j = 0; j < cells; ++j) {
        dz[j] += lambda_u * pm * ((j == top ? 1.0 : 0.0) - pi[j]);
      }
    }
    double* gk = grad + i * depth;
    for (std::size_t j = 0; j < cells; ++j) {
      const double g = dz[j];
      if (g == 0.0) continue;
      const double* v = fmap.data.data() + j * depth;
      for (std::size_t d = 0; d < depth; ++d) gk[d] += g * v[d];
    }
  }
  return terms;
}

void CheckBatch(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  Require(!batch.empty(), Errc::kInvalidArgument, "empty batch");
  for (const LabeledFeatures& s : batch) {
    Require(s.features != nullptr, Errc::kInvalidArgument, "batch entry without features");
    Require(s.label < bank.num_classes(), Errc::kInvalidArgument,
            "label " + std::to_string(s.label) + " out of range for " +
                std::to_string(bank.num_classes()) + " classes");
  }
}

SampleTerms SumTerms(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  CheckBatch(bank, batch);
  SampleTerms total;
  for (const LabeledFeatures& s : batch) {
    const SampleTerms t =
        EvaluateSample(bank.class_block(s.label), bank.per_class(), bank.depth(), bank.lambda_u(),
                       bank.threshold(), *s.features, nullptr);
    total.locality += t.locality;
    total.unicity += t.unicity;
  }
  return total;
}

}  // namespace

DetectorBank::DetectorBank(std::uint32_t num_classes, std::size_t depth,
                           const DetectorParams& params)
    : num_classes_(num_classes),
      per_class_(params.per_class),
      depth_(depth),
      lambda_u_(params.lambda_u),
      threshold_(params.threshold),
      kernels_(static_cast<std::size_t>(num_classes) * params.per_class * depth, 0.0) {
  Require(num_classes >= 1, Errc::kInvalidArgument, "detector bank needs >= 1 class");
  Require(params.per_class >= 1, Errc::kInvalidArgument, "detector bank needs p >= 1");
  Require(depth >= 1, Errc::kInvalidArgument, "detector bank needs depth >= 1");
  Require(std::isfinite(params.lambda_u) && params.lambda_u >= 0.0, Errc::kInvalidArgument,
          "lambda_u must be finite and >= 0");
  Require(std::isfinite(params.threshold), Errc::kInvalidArgument, "threshold must be finite");
}

std::vector<double> DetectorBank::InitialClassKernels(std::uint32_t cls, std::size_t depth,
                                                      std::size_t per_class, std::uint64_t seed) {
  Rng rng(MixSeed(seed, 0xd7c0000ULL + cls));
  std::vector<double> block(per_class * depth);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(depth));
  for (double& v : block) v = rng.Normal(0.0, stddev);
  return block;
}

DetectorBank DetectorBank::Random(std::uint32_t num_classes, std::size_t depth,
                                  const DetectorParams& params, std::uint64_t seed) {
  DetectorBank bank(num_classes, depth, params);
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    const std::vector<double> block = InitialClassKernels(c, depth, params.per_class, seed);
    std::copy(block.begin(), block.end(), bank.class_block(c).begin());
  }
  return bank;
}

void DetectorBank::CheckIndex(std::uint32_t cls, std::size_t i) const {
  Require(cls < num_classes_, Errc::kInvalidArgument,
          "class index " + std::to_string(cls) + " out of range (N = " +
              std::to_string(num_classes_) + ")");
  Require(i < per_class_, Errc::kInvalidArgument,
          "detector index " + std::to_string(i) + " out of range (p = " +
              std::to_string(per_class_) + ")");
}

std::span<const double> DetectorBank::kernel(std::uint32_t cls, std::size_t i) const {
  CheckIndex(cls, i);
  return std::span<const double>(kernels_).subspan((cls * per_class_ + i) * depth_, depth_);
}

std::span<double> DetectorBank::kernel(std::uint32_t cls, std::size_t i) {
  CheckIndex(cls, i);
  return std::span<double>(kernels_).subspan((cls * per_class_ + i) * depth_, depth_);
}

std::span<const double> DetectorBank::class_block(std::uint32_t cls) const {
  CheckIndex(cls, 0);
  return std::span<const double>(kernels_).subspan(cls * per_class_ * depth_, per_class_ * depth_);
}

std::span<double> DetectorBank::class_block(std::uint32_t cls) {
  CheckIndex(cls, 0);
  return std::span<double>(kernels_).subspan(cls * per_class_ * depth_, per_class_ * depth_);
}

void DetectorBank::Save(const std::string& path) const {
  io::Writer out;
  out.Magic(kMagic);
  out.U32(num_classes_);
  out.U32(static_cast<std::uint32_t>(per_class_));
  out.U32(static_cast<std::uint32_t>(depth_));
  out.F64(lambda_u_);
  out.F64(threshold_);
  out.F64s(kernels_);
  out.WriteFile(path);
}

DetectorBank DetectorBank::Load(const std::string& path) {
  io::Reader in = io::Reader::FromFile(path);
  in.ExpectMagic(kMagic);
  const std::uint32_t n = in.U32();
  DetectorParams params;
  params.per_class = in.U32();
  const std::uint32_t depth = in.U32();
  params.lambda_u = in.F64();
  params.threshold = in.F64();
  DetectorBank bank(n, depth, params);
  in.set_context("detector kernels");
  in.F64s(bank.kernels_);
  Require(in.AtEnd(), Errc::kFormat, "trailing bytes after detector kernels");
  for (double v : bank.kernels_) {
    Require(std::isfinite(v), Errc::kFormat, "detector bank holds a non-finite kernel value");
  }
  return bank;
}

std::vector<LabeledFeatures> AsBatch(const FeatureSet& set) {
  std::vector<LabeledFeatures> batch;
  batch.reserve(set.size());
  for (const FeatureRecord& r : set.records) batch.push_back({&r.features, r.label});
  return batch;
}

Map2D ActivationMap(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                    const FeatureMap& fmap) {
  return Softmax2D(Correlate1x1(fmap, bank.kernel(cls, i)));
}

Map2D CumulativeMap(const DetectorBank& bank, std::uint32_t cls, const FeatureMap& fmap) {
  Map2D sum(fmap.height, fmap.width);
  for (std::size_t i = 0; i < bank.per_class(); ++i) {
    const Map2D p = ActivationMap(bank, cls, i, fmap);
    for (std::size_t j = 0; j < sum.cells(); ++j) sum.data[j] += p.data[j];
  }
  return sum;
}

double LocalityLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  return SumTerms(bank, batch).locality;
}

double UnicityLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  return SumTerms(bank, batch).unicity;
}

double TotalLoss(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  const SampleTerms t = SumTerms(bank, batch);
  return t.locality + bank.lambda_u() * t.unicity;
}

std::vector<double> GradDetectors(const DetectorBank& bank,
                                  std::span<const LabeledFeatures> batch) {
  CheckBatch(bank, batch);
  std::vector<double> grad(bank.data().size(), 0.0);
  const std::size_t block = bank.per_class() * bank.depth();
  for (const LabeledFeatures& s : batch) {
    EvaluateSample(bank.class_block(s.label), bank.per_class(), bank.depth(), bank.lambda_u(),
                   bank.threshold(), *s.features, grad.data() + s.label * block);
  }
  return grad;
}

std::vector<double> TrainClassDetectors(std::uint32_t cls, std::span<const LabeledFeatures> samples,
                                        std::size_t depth, const DetectorParams& params,
                                        const DetectorTrainConfig& config,
                                        std::vector<double>* epoch_losses) {
  Require(!samples.empty(), Errc::kInvalidArgument,
          "class " + std::to_string(cls) + " has no training samples");
  Require(config.learning_rate > 0.0 && config.epochs >= 1, Errc::kInvalidArgument,
          "detector training needs learning rate > 0 and epochs >= 1");
  for (const LabeledFeatures& s : samples) {
    Require(s.features && s.label == cls, Errc::kInvalidArgument,
            "class " + std::to_string(cls) + " chunk contains a sample of another class");
  }
  const std::size_t p = params.per_class;
  std::vector<double> block = DetectorBank::InitialClassKernels(cls, depth, p, config.seed);
  std::vector<double> mean_square(block.size(), 0.0);
  std::vector<double> grad(block.size());
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(MixSeed(config.seed, 0xba7c0000ULL + cls));
  const std::size_t batch = config.batch_size == 0 ? samples.size() : config.batch_size;
  if (epoch_losses) epoch_losses->clear();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.batch_size != 0) rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        EvaluateSample(block, p, depth, params.lambda_u, params.threshold,
                       *samples[order[k]].features, grad.data());
      }
      for (std::size_t j = 0; j < block.size(); ++j) {
        mean_square[j] = config.rho * mean_square[j] + (1.0 - config.rho) * grad[j] * grad[j];
        const double step = grad[j] / std::sqrt(mean_square[j] + config.epsilon);
        block[j] -= config.learning_rate * (step + config.weight_decay * block[j]);
      }
    }
    if (epoch_losses) {
      double loss = 0.0;
      for (const LabeledFeatures& s : samples) {
        const SampleTerms t = EvaluateSample(block, p, depth, params.lambda_u, params.threshold,
                                             *s.features, nullptr);
        loss += t.locality + params.lambda_u * t.unicity;
      }
      epoch_losses->push_back(loss);
    }
  }
  return block;
}

DetectorBank TrainDetectors(const FeatureSet& set, const DetectorParams& params,
                            const DetectorTrainConfig& config,
                            std::vector<std::vector<double>>* epoch_losses) {
  Require(!set.records.empty(), Errc::kInvalidArgument, "train_detectors: empty feature set");
  DetectorBank bank(set.num_classes, set.depth, params);
  std::vector<std::vector<LabeledFeatures>> per_class(set.num_classes);
  for (const FeatureRecord& r : set.records) {
    Require(r.label < set.num_classes, Errc::kInvalidArgument, "feature record label out of range");
    per_class[r.label].push_back({&r.features, r.label});
  }
  for (std::uint32_t c = 0; c < set.num_classes; ++c) {
    Require(!per_class[c].empty(), Errc::kInvalidArgument,
            "class " + std::to_string(c) + " has no training samples");
  }
  if (epoch_losses) epoch_losses->assign(set.num_classes, {});
  ParallelFor(
      set.num_classes,
      [&](std::size_t c) {
        const auto cls = static_cast<std::uint32_t>(c);
        const std::vector<double> block =
            TrainClassDetectors(cls, per_class[c], set.depth, params, config,
                                epoch_losses ? &(*epoch_losses)[c] : nullptr);
        std::copy(block.begin(), block.end(), bank.class_block(cls).begin());
      },
      config.threads);
  return bank;
}

}  // namespace codeood
