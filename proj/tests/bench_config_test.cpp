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

#include "bench/config.hpp"

#include <algorithm>
#include <string>

#include "bench/pipeline.hpp"
#include "gtest/gtest.h"

namespace codeood::bench {
namespace {

std::string ErrorOf(const std::string& text) {
  try {
    Config::Parse(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsFollowTheDocumentedValues) {
  const Config c = Config::Defaults();
  EXPECT_EQ(c.GetUint("detector.per_class"), 4u);
  EXPECT_EQ(c.GetDouble("detector.lambda_u"), 1.0);
  EXPECT_EQ(c.GetDouble("detector.threshold"), 1.0);
  EXPECT_EQ(c.GetDouble("detector.learning_rate"), 5e-4);
  EXPECT_EQ(c.GetDouble("detector.weight_decay"), 1e-5);
  EXPECT_EQ(c.GetUint("osr.closed"), 6u);
  EXPECT_EQ(c.GetUint("osr.splits"), 5u);
  EXPECT_EQ(c.GetDouble("explain.threshold"), 0.3);
  EXPECT_FALSE(c.GetBool("strict"));
  EXPECT_FALSE(c.IsExplicit("seed"));
}

TEST(Config, ParsesCommentsAndBlanks) {
  const Config c = Config::Parse(
      "# experiment\n"
      "\n"
      "seed = 12   # trailing comment\n"
      "  scorers =  msp , energy,,  \n"
      "perturbation.grid.blur = 0, 2.5, 5\n",
      "inline");
  EXPECT_EQ(c.GetUint("seed"), 12u);
  EXPECT_TRUE(c.IsExplicit("seed"));
  EXPECT_EQ(c.GetList("scorers"), (std::vector<std::string>{"msp", "energy"}));
  EXPECT_EQ(c.GetDoubleList("perturbation.grid.blur"), (std::vector<double>{0.0, 2.5, 5.0}));
}

TEST(Config, ErrorsNameOriginAndLine) {
  EXPECT_NE(ErrorOf("seed = 1\nno equals sign\n").find("test.cfg:2"), std::string::npos);
  EXPECT_NE(ErrorOf("\n\nsede = 3\n").find("test.cfg:3"), std::string::npos);
  EXPECT_NE(ErrorOf("\n\nsede = 3\n").find("unknown config key 'sede'"), std::string::npos);
  EXPECT_NE(ErrorOf(" = 3\n").find("missing key"), std::string::npos);
}

TEST(Config, TypedGettersRejectBadValues) {
  Config c = Config::Defaults();
  c.Set("seed", "-4");
  EXPECT_THROW(c.GetUint("seed"), ConfigError);
  c.Set("seed", "12abc");
  EXPECT_THROW(c.GetUint("seed"), ConfigError);
  c.Set("strict", "maybe");
  EXPECT_THROW(c.GetBool("strict"), ConfigError);
  c.Set("detector.lambda_u", "one");
  EXPECT_THROW(c.GetDouble("detector.lambda_u"), ConfigError);
  EXPECT_THROW(c.Set("nope", "1"), ConfigError);
  EXPECT_THROW(c.GetString("nope"), ConfigError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(Config::Load("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, HashIgnoresOutputDirectory) {
  Config a = Config::Defaults();
  Config b = Config::Defaults();
  b.Set("out", "/somewhere/else");
  EXPECT_EQ(a.Hash(), b.Hash());
  EXPECT_EQ(a.Canonical().find("out="), std::string::npos);
  b.Set("seed", "1");
  EXPECT_NE(a.Hash(), b.Hash());
  EXPECT_EQ(a.Hash().size(), 16u);
}

TEST(Pipeline, ScorerLists) {
  Config c = Config::Defaults();
  c.Set("scorers", "msp,code,constant");
  const auto ood = OodScorers(c);
  ASSERT_GE(ood.size(), 4u);
  EXPECT_EQ(ood[0], "code");
  EXPECT_EQ(ood[1], "code_top1");
  EXPECT_EQ(std::count(ood.begin(), ood.end(), "code"), 1);
  c.Set("code.mode", "top1");
  EXPECT_EQ(SweepScorers(c), (std::vector<std::string>{"msp", "code_top1", "constant"}));
}

TEST(Pipeline, StagesInOrder) {
  std::vector<std::string> names;
  for (const Stage& s : Stages()) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"train-classifier", "extract-features",
                                             "train-detectors", "calibrate", "eval-ood",
                                             "eval-perturbation", "eval-osr", "explain",
                                             "report"}));
}

}  // namespace
}  // namespace codeood::bench
