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
#include <set>
#include <vector>

#include "codeood/dataset.hpp"
#include "codeood/error.hpp"
#include "gtest/gtest.h"

namespace codeood {
namespace {

TEST(OsrSplits, DeterministicSortedAndDistinct) {
  const auto a = OsrSplits(10, 6, 5, 7);
  const auto b = OsrSplits(10, 6, 5, 7);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 5u);
  std::set<std::vector<std::uint32_t>> seen;
  for (const auto& closed : a) {
    ASSERT_EQ(closed.size(), 6u);
    EXPECT_TRUE(std::is_sorted(closed.begin(), closed.end()));
    EXPECT_EQ(std::set<std::uint32_t>(closed.begin(), closed.end()).size(), 6u);
    EXPECT_LT(closed.back(), 10u);
    seen.insert(closed);
  }
  EXPECT_GT(seen.size(), 1u);
  EXPECT_NE(OsrSplits(10, 6, 5, 8), a);
  // A longer protocol starts with the same splits.
  const auto longer = OsrSplits(10, 6, 7, 7);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), longer.begin()));
}

TEST(OsrSplits, Errors) {
  EXPECT_THROW(OsrSplits(6, 6, 5, 0), Error);
  EXPECT_THROW(OsrSplits(10, 1, 5, 0), Error);
  EXPECT_THROW(OsrSplits(10, 6, 0, 0), Error);
}

TEST(OsrEvaluate, ConstantScorerIsChance) {
  SyntheticParams params;
  params.classes = 4;
  params.size = 12;
  params.train_per_class = 8;
  params.test_per_class = 4;
  const SyntheticData data = GenerateSynthetic(params);
  OsrConfig config;
  config.closed_classes = 2;
  config.splits = 2;
  config.classifier.epochs = 2;
  config.classifier.conv1_channels = 2;
  config.classifier.feature_channels = 3;
  config.detector_training.epochs = 2;
  config.scorers = {"constant", "msp"};
  const OsrResult r = OsrEvaluate(data.train, data.test, config);
  ASSERT_EQ(r.splits.size(), 2u);
  EXPECT_EQ(r.scorers, config.scorers);
  const auto expected = OsrSplits(4, 2, 2, config.seed);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(r.splits[s].closed, expected[s]);
    EXPECT_EQ(r.splits[s].open.size(), 2u);
    EXPECT_EQ(r.splits[s].auroc[0], 0.5);
    EXPECT_GE(r.splits[s].auroc[1], 0.0);
    EXPECT_LE(r.splits[s].auroc[1], 1.0);
  }
  EXPECT_EQ(r.mean_auroc[0], 0.5);
  EXPECT_DOUBLE_EQ(r.mean_auroc[1], 0.5 * (r.splits[0].auroc[1] + r.splits[1].auroc[1]));

  config.closed_classes = 4;
  EXPECT_THROW(OsrEvaluate(data.train, data.test, config), Error);
}

}  // namespace
}  // namespace codeood
