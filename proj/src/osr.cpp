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

#include "codeood/osr.hpp"

#include <algorithm>
#include <numeric>

#include "codeood/confidence.hpp"
#include "codeood/error.hpp"
#include "codeood/feature_set.hpp"
#include "codeood/metrics.hpp"
#include "codeood/rng.hpp"

namespace codeood {

std::vector<std::vector<std::uint32_t>> OsrSplits(std::uint32_t num_classes,
                                                  std::uint32_t closed, std::uint32_t splits,
                                                  std::uint64_t seed) {
  Require(closed >= 2, Errc::kInvalidArgument, "open-set split needs >= 2 closed classes");
  Require(num_classes >= closed + 1, Errc::kInvalidArgument,
          "open-set split needs more classes (" + std::to_string(num_classes) +
              ") than closed classes (" + std::to_string(closed) + ")");
  Require(splits >= 1, Errc::kInvalidArgument, "open-set protocol needs >= 1 split");
  std::vector<std::vector<std::uint32_t>> out;
  for (std::uint32_t s = 0; s < splits; ++s) {
    std::vector<std::uint32_t> ids(num_classes);
    std::iota(ids.begin(), ids.end(), 0u);
    Rng rng(MixSeed(seed, 0x05e50000ULL + s));
    rng.Shuffle(std::span<std::uint32_t>(ids));
    ids.resize(closed);
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  return out;
}

OsrResult OsrEvaluate(const Dataset& train, const Dataset& test, const OsrConfig& config) {
  const std::uint32_t num_classes = std::max(train.num_classes, test.num_classes);
  const auto splits = OsrSplits(num_classes, config.closed_classes, config.splits, config.seed);
  Require(!config.scorers.empty(), Errc::kInvalidArgument, "open-set protocol needs a scorer");

  OsrResult result;
  result.scorers = config.scorers;
  result.mean_auroc.assign(config.scorers.size(), 0.0);
  for (std::size_t s = 0; s < splits.size(); ++s) {
    OsrSplitResult split;
    split.closed = splits[s];
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      if (!std::binary_search(split.closed.begin(), split.closed.end(), c)) split.open.push_back(c);
    }
    const Dataset closed_train = SelectClasses(train, split.closed, true);
    const Dataset closed_test = SelectClasses(test, split.closed, true);
    const Dataset open_test = SelectClasses(test, split.open, false);
    Require(!closed_test.empty() && !open_test.empty(), Errc::kInvalidArgument,
            "open-set split " + std::to_string(s) + " has no closed or no open test images");

    ClassifierConfig cls_cfg = config.classifier;
    cls_cfg.seed = MixSeed(config.classifier.seed, s);
    Classifier model = TrainClassifier(closed_train, cls_cfg);
    model.Freeze();
    split.classifier_accuracy = Accuracy(model, closed_test);

    const FeatureSet features = ExtractFeatureSet(model, closed_train);
    DetectorTrainConfig det_cfg = config.detector_training;
    det_cfg.seed = MixSeed(config.detector_training.seed, s);
    const DetectorBank bank = TrainDetectors(features, config.detector, det_cfg);
    const CalibrationStats stats = Calibrate(bank, features);
    const FnrdRanges fnrd = FnrdCalibrate(model, closed_train);

    const ScorerResources resources{&bank, &stats, &fnrd};
    std::vector<std::unique_ptr<Scorer>> owned;
    std::vector<const Scorer*> scorers;
    for (const std::string& name : config.scorers) {
      owned.push_back(MakeScorer(name, resources));
      scorers.push_back(owned.back().get());
    }
    const auto id_scores = ScoreImages(model, scorers, closed_test.images);
    const auto ood_scores = ScoreImages(model, scorers, open_test.images);
    for (std::size_t k = 0; k < scorers.size(); ++k) {
      const auto samples = MakeSamples(id_scores[k], ood_scores[k]);
      split.auroc.push_back(Auroc(samples));
      result.mean_auroc[k] += split.auroc.back();
    }
    result.splits.push_back(std::move(split));
  }
  for (double& m : result.mean_auroc) m /= static_cast<double>(result.splits.size());
  return result;
}

}  // namespace codeood
