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

#include "codeood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "codeood/error.hpp"

namespace codeood {

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts CheckSamples(std::span<const ScoreSample> samples) {
  Counts c;
  for (const ScoreSample& s : samples) {
    Require(std::isfinite(s.score), Errc::kInvalidArgument, "non-finite score");
    (s.is_id ? c.pos : c.neg)++;
  }
  Require(c.pos > 0 && c.neg > 0, Errc::kInvalidArgument,
          "metric needs at least one ID and one OoD sample");
  return c;
}

// Indices sorted by descending score.
std::vector<std::size_t> DescendingOrder(std::span<const ScoreSample> samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score > samples[b].score;
  });
  return order;
}

}  // namespace

std::vector<ScoreSample> MakeSamples(std::span<const double> id_scores,
                                     std::span<const double> ood_scores) {
  std::vector<ScoreSample> out;
  out.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) out.push_back({s, true});
  for (double s : ood_scores) out.push_back({s, false});
  return out;
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Auroc(std::span<const ScoreSample> samples) {
  const Counts c = CheckSamples(samples);
  std::vector<double> scores(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) scores[i] = samples[i].score;
  const std::vector<double> ranks = AverageRanks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].is_id) rank_sum += ranks[i];
  }
  const double npos = static_cast<double>(c.pos);
  const double u = rank_sum - npos * (npos + 1.0) / 2.0;
  return u / (npos * static_cast<double>(c.neg));
}

double Aupr(std::span<const ScoreSample> samples) {
  const Counts c = CheckSamples(samples);
  const std::vector<std::size_t> order = DescendingOrder(samples);
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) {
      (samples[order[j]].is_id ? tp : fp)++;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(c.pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

double FprAt95Tpr(std::span<const ScoreSample> samples) {
  const Counts c = CheckSamples(samples);
  const std::vector<std::size_t> order = DescendingOrder(samples);
  std::size_t tp = 0;
  std::size_t fp = 0;
  // Lowering the threshold group by group, the first group reaching the TPR
  // target is the largest qualifying threshold.
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) {
      (samples[order[j]].is_id ? tp : fp)++;
      ++j;
    }
    if (static_cast<double>(tp) >= 0.95 * static_cast<double>(c.pos)) {
      return static_cast<double>(fp) / static_cast<double>(c.neg);
    }
    i = j;
  }
  return 1.0;
}

Correlation Spearman(std::span<const double> xs, std::span<const double> ys) {
  Require(xs.size() == ys.size(), Errc::kInvalidArgument,
          "spearman: length mismatch (" + std::to_string(xs.size()) + " vs " +
              std::to_string(ys.size()) + ")");
  Require(xs.size() >= 3, Errc::kInvalidArgument, "spearman: needs at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Require(std::isfinite(xs[i]) && std::isfinite(ys[i]), Errc::kInvalidArgument,
            "spearman: non-finite input");
  }
  const std::vector<double> rx = AverageRanks(xs);
  const std::vector<double> ry = AverageRanks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return Correlation{0.0, true};
  const double r = sxy / std::sqrt(sxx * syy);
  return Correlation{std::clamp(r, -1.0, 1.0), false};
}

}  // namespace codeood
