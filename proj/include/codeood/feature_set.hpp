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

#ifndef CODEOOD_FEATURE_SET_HPP_
#define CODEOOD_FEATURE_SET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/tensor.hpp"

namespace codeood {

struct FeatureRecord {
  std::uint32_t label = 0;
  std::vector<double> logits;
  FeatureMap features;

  bool operator==(const FeatureRecord&) const = default;
};

// Frozen-backbone outputs for a labelled image set.
struct FeatureSet {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t depth = 0;
  std::uint32_t num_classes = 0;
  std::vector<FeatureRecord> records;

  std::size_t size() const { return records.size(); }
  bool operator==(const FeatureSet&) const = default;
};

FeatureSet ExtractFeatureSet(const Classifier& model, const Dataset& dataset);

// Binary layout, little-endian:
//   "CODEFM01" | u32 count | u32 H | u32 W | u32 D | u32 N |
//   count x ( u32 label | N x f64 logits | H*W*D x f64 features )
std::vector<std::uint8_t> EncodeFeatureSet(const FeatureSet& set);
FeatureSet DecodeFeatureSet(std::vector<std::uint8_t> bytes);
void SaveFeatureSet(const FeatureSet& set, const std::string& path);
FeatureSet LoadFeatureSet(const std::string& path);

}  // namespace codeood

#endif  // CODEOOD_FEATURE_SET_HPP_
