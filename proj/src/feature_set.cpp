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

#include "codeood/feature_set.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "codeood/error.hpp"
#include "codeood/parallel.hpp"

namespace codeood {

namespace {
constexpr std::string_view kMagic("CODEFM01", 8);
}

FeatureSet ExtractFeatureSet(const Classifier& model, const Dataset& dataset) {
  Require(!dataset.empty(), Errc::kInvalidArgument, "extract_features: empty dataset");
  const Architecture& a = model.architecture();
  FeatureSet set;
  set.height = static_cast<std::uint32_t>(a.feature_height());
  set.width = static_cast<std::uint32_t>(a.feature_width());
  set.depth = static_cast<std::uint32_t>(a.feature_channels);
  set.num_classes = a.num_classes;
  set.records.resize(dataset.size());
  ParallelFor(dataset.size(), [&](std::size_t i) {
    const Image& image = dataset.images[i];
    Require(image.label.has_value() && *image.label < a.num_classes, Errc::kInvalidArgument,
            "extract_features: image " + std::to_string(i) + " has no valid label");
    Activations act = model.Forward(image);
    set.records[i].label = *image.label;
    set.records[i].logits = std::move(act.logits);
    set.records[i].features = std::move(act.features);
  });
  return set;
}

std::vector<std::uint8_t> EncodeFeatureSet(const FeatureSet& set) {
  Require(!set.records.empty(), Errc::kInvalidArgument, "feature set is empty");
  const std::size_t cells = static_cast<std::size_t>(set.height) * set.width * set.depth;
  io::Writer out;
  out.Magic(kMagic);
  out.U32(static_cast<std::uint32_t>(set.records.size()));
  out.U32(set.height);
  out.U32(set.width);
  out.U32(set.depth);
  out.U32(set.num_classes);
  for (const FeatureRecord& r : set.records) {
    Require(r.logits.size() == set.num_classes && r.features.data.size() == cells &&
                r.label < set.num_classes,
            Errc::kDimensionMismatch, "feature record does not match the set header");
    out.U32(r.label);
    out.F64s(r.logits);
    out.F64s(r.features.data);
  }
  return out.bytes();
}

FeatureSet DecodeFeatureSet(std::vector<std::uint8_t> bytes) {
  io::Reader in(std::move(bytes));
  in.ExpectMagic(kMagic);
  const std::uint32_t count = in.U32();
  FeatureSet set;
  set.height = in.U32();
  set.width = in.U32();
  set.depth = in.U32();
  set.num_classes = in.U32();
  Require(set.height > 0 && set.width > 0 && set.depth > 0 && set.num_classes > 0,
          Errc::kFormat, "inconsistent record: feature set header has a zero dimension");
  const std::size_t cells = static_cast<std::size_t>(set.height) * set.width * set.depth;
  const std::size_t record_bytes = 4 + 8 * (set.num_classes + cells);
  if (in.remaining() < static_cast<std::size_t>(count) * record_bytes) {
    Fail(Errc::kFormat, "truncated record: feature set declares " + std::to_string(count) +
                            " records but holds " + std::to_string(in.remaining()) +
                            " payload bytes");
  }
  set.records.resize(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    in.set_context("feature record " + std::to_string(n));
    FeatureRecord& r = set.records[n];
    r.label = in.U32();
    Require(r.label < set.num_classes, Errc::kFormat,
            "inconsistent record: record " + std::to_string(n) + " has label " +
                std::to_string(r.label) + " >= N = " + std::to_string(set.num_classes));
    r.logits.resize(set.num_classes);
    in.F64s(r.logits);
    r.features = FeatureMap(set.height, set.width, set.depth);
    in.F64s(r.features.data);
  }
  Require(in.AtEnd(), Errc::kFormat, "inconsistent record: trailing bytes after feature records");
  return set;
}

void SaveFeatureSet(const FeatureSet& set, const std::string& path) {
  const std::vector<std::uint8_t> bytes = EncodeFeatureSet(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), Errc::kIo, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(out), Errc::kIo, "write failed for '" + path + "'");
}

FeatureSet LoadFeatureSet(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), Errc::kIo, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeFeatureSet(std::move(bytes));
}

}  // namespace codeood
