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

#ifndef CODEOOD_METRICS_HPP_
#define CODEOOD_METRICS_HPP_

#include <span>
#include <vector>

namespace codeood {

// In-distribution samples are the positive class.
struct ScoreSample {
  double score = 0.0;
  bool is_id = false;
};

std::vector<ScoreSample> MakeSamples(std::span<const double> id_scores,
                                     std::span<const double> ood_scores);

// Mann-Whitney U / (n_pos n_neg), ties counted 1/2.
double Auroc(std::span<const ScoreSample> samples);
// Average precision: descending-score sweep; tied scores form one threshold.
double Aupr(std::span<const ScoreSample> samples);
// FPR at the largest threshold whose TPR (score >= threshold) is >= 0.95.
double FprAt95Tpr(std::span<const ScoreSample> samples);

struct Correlation {
  double value = 0.0;
  bool degenerate = false;  // a constant input; value is 0
};

// Pearson correlation of average ranks.
Correlation Spearman(std::span<const double> xs, std::span<const double> ys);

// 1-based average ranks (ties share the mean rank).
std::vector<double> AverageRanks(std::span<const double> values);

}  // namespace codeood

#endif  // CODEOOD_METRICS_HPP_
