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

#include "codeood/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "codeood/error.hpp"
#include "codeood/parallel.hpp"

namespace codeood {

namespace {

constexpr std::string_view kStatsMagic("CODECS01", 8);
constexpr std::string_view kFnrdMagic("CODEFN01", 8);

const double kOpenLow = std::numeric_limits<double>::min();
const double kOpenHigh = std::nextafter(1.0, 0.0);

double OpenUnit(double v) { return std::clamp(v, kOpenLow, kOpenHigh); }

void CheckCalibrated(const DetectorBank& bank, const CalibrationStats& stats) {
  Require(stats.num_classes == bank.num_classes() && stats.per_class == bank.per_class() &&
              stats.mu.size() == bank.num_classes() * bank.per_class() &&
              stats.sigma.size() == stats.mu.size(),
          Errc::kState, "detector bank is not calibrated (no matching calibration stats)");
}

}  // namespace

void RunningStats::Add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::Merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
  n_ += other.n_;
}

double RunningStats::stddev() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_ - 1)));
}

void CalibrationStats::Save(const std::string& path) const {
  io::Writer out;
  out.Magic(kStatsMagic);
  out.U32(num_classes);
  out.U32(static_cast<std::uint32_t>(per_class));
  out.F64s(mu);
  out.F64s(sigma);
  out.WriteFile(path);
}

CalibrationStats CalibrationStats::Load(const std::string& path) {
  io::Reader in = io::Reader::FromFile(path);
  in.ExpectMagic(kStatsMagic);
  CalibrationStats stats;
  stats.num_classes = in.U32();
  stats.per_class = in.U32();
  const std::size_t n = static_cast<std::size_t>(stats.num_classes) * stats.per_class;
  stats.mu.resize(n);
  stats.sigma.resize(n);
  in.set_context("calibration stats");
  in.F64s(stats.mu);
  in.F64s(stats.sigma);
  Require(in.AtEnd(), Errc::kFormat, "trailing bytes after calibration stats");
  for (double s : stats.sigma) {
    Require(std::isfinite(s) && s >= stats.sigma_floor, Errc::kFormat,
            "calibration sigma below the floor");
  }
  return stats;
}

CorrelationPeak MaxCorrelationPeak(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                                   const FeatureMap& fmap) {
  const Map2D corr = Correlate1x1(fmap, bank.kernel(cls, i));
  const std::size_t best = ArgMax(corr.data);
  return CorrelationPeak{corr.data[best], best / corr.width, best % corr.width};
}

double MaxCorrelation(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                      const FeatureMap& fmap) {
  return MaxCorrelationPeak(bank, cls, i, fmap).value;
}

CalibrationStats Calibrate(const DetectorBank& bank, const FeatureSet& train, double sigma_floor) {
  Require(sigma_floor > 0.0, Errc::kInvalidArgument, "sigma floor must be > 0");
  Require(train.num_classes == bank.num_classes(), Errc::kDimensionMismatch,
          "calibrate: feature set has " + std::to_string(train.num_classes) +
              " classes, bank has " + std::to_string(bank.num_classes()));
  const std::size_t p = bank.per_class();
  std::vector<RunningStats> acc(bank.num_classes() * p);
  for (const FeatureRecord& r : train.records) {
    for (std::size_t i = 0; i < p; ++i) {
      acc[r.label * p + i].Add(MaxCorrelation(bank, r.label, i, r.features));
    }
  }
  CalibrationStats stats;
  stats.num_classes = bank.num_classes();
  stats.per_class = p;
  stats.sigma_floor = sigma_floor;
  stats.mu.resize(acc.size());
  stats.sigma.resize(acc.size());
  for (std::uint32_t c = 0; c < bank.num_classes(); ++c) {
    Require(acc[c * p].count() >= 2, Errc::kInvalidArgument,
            "calibrate: class " + std::to_string(c) + " has fewer than 2 training samples");
    for (std::size_t i = 0; i < p; ++i) {
      stats.mu[c * p + i] = acc[c * p + i].mean();
      stats.sigma[c * p + i] = std::max(acc[c * p + i].stddev(), sigma_floor);
    }
  }
  return stats;
}

double Sigmoid(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return OpenUnit(s);
}

double DetectorConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                          std::uint32_t cls, std::size_t i, const FeatureMap& fmap) {
  CheckCalibrated(bank, stats);
  const double h = MaxCorrelation(bank, cls, i, fmap);
  return Sigmoid((h - stats.mean(cls, i)) / stats.stddev(cls, i));
}

double ClassConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                       std::uint32_t cls, const FeatureMap& fmap) {
  double sum = 0.0;
  for (std::size_t i = 0; i < bank.per_class(); ++i) {
    sum += DetectorConfidence(bank, stats, cls, i, fmap);
  }
  return OpenUnit(sum / static_cast<double>(bank.per_class()));
}

std::vector<double> SoftmaxProbabilities(std::span<const double> logits) {
  Require(!logits.empty(), Errc::kInvalidArgument, "softmax of an empty logit vector");
  std::vector<double> p(logits.begin(), logits.end());
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) total += (v = std::exp(v - peak));
  for (double& v : p) v /= total;
  return p;
}

double CodeConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                      const FeatureMap& features, std::span<const double> logits, CodeMode mode) {
  CheckCalibrated(bank, stats);
  Require(logits.size() == bank.num_classes(), Errc::kDimensionMismatch,
          "model has " + std::to_string(logits.size()) + " classes, detector bank has " +
              std::to_string(bank.num_classes()));
  if (mode == CodeMode::kTop1) {
    const auto top = static_cast<std::uint32_t>(ArgMax(logits));
    return ClassConfidence(bank, stats, top, features);
  }
  const std::vector<double> prob = SoftmaxProbabilities(logits);
  double score = 0.0;
  for (std::uint32_t c = 0; c < bank.num_classes(); ++c) {
    if (prob[c] == 0.0) continue;
    score += ClassConfidence(bank, stats, c, features) * prob[c];
  }
  return OpenUnit(score);
}

ConfidenceScore CodeConfidence(const DetectorBank& bank, const CalibrationStats& stats,
                               const Classifier& model, const Image& image, CodeMode mode) {
  const Activations act = model.Forward(image);
  ConfidenceScore out;
  out.value = CodeConfidence(bank, stats, act.features, act.logits, mode);
  out.method = mode == CodeMode::kWeighted ? "code" : "code_top1";
  out.mode = mode;
  return out;
}

double BaselineScore(Baseline method, std::span<const double> logits) {
  Require(logits.size() >= 2, Errc::kInvalidArgument, "baseline scores need >= 2 logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  switch (method) {
    case Baseline::kMaxLogit:
      return peak;
    case Baseline::kMsp: {
      double total = 0.0;
      for (double v : logits) total += std::exp(v - peak);
      return 1.0 / total;
    }
    case Baseline::kEnergy: {
      double total = 0.0;
      for (double v : logits) total += std::exp(v - peak);
      return peak + std::log(total);
    }
  }
  Fail(Errc::kInvalidArgument, "unknown baseline method");
}

void FnrdRanges::Save(const std::string& path) const {
  io::Writer out;
  out.Magic(kFnrdMagic);
  out.U32(num_classes);
  out.U32(static_cast<std::uint32_t>(width));
  for (std::uint8_t c : calibrated) out.U32(c);
  out.F64s(lo);
  out.F64s(hi);
  out.WriteFile(path);
}

FnrdRanges FnrdRanges::Load(const std::string& path) {
  io::Reader in = io::Reader::FromFile(path);
  in.ExpectMagic(kFnrdMagic);
  FnrdRanges r;
  r.num_classes = in.U32();
  r.width = in.U32();
  in.set_context("FNRD ranges");
  r.calibrated.resize(r.num_classes);
  for (auto& c : r.calibrated) c = in.U32() ? 1 : 0;
  r.lo.resize(r.num_classes * r.width);
  r.hi.resize(r.num_classes * r.width);
  in.F64s(r.lo);
  in.F64s(r.hi);
  Require(in.AtEnd(), Errc::kFormat, "trailing bytes after FNRD ranges");
  return r;
}

std::vector<double> MonitoredActivations(const Activations& act) {
  std::vector<double> out;
  out.reserve(act.features.data.size() + act.penultimate.size());
  out.insert(out.end(), act.features.data.begin(), act.features.data.end());
  out.insert(out.end(), act.penultimate.begin(), act.penultimate.end());
  return out;
}

FnrdRanges FnrdCalibrate(const Classifier& model, const Dataset& train) {
  Require(!train.empty(), Errc::kInvalidArgument, "fnrd_calibrate: empty training set");
  const Architecture& a = model.architecture();
  FnrdRanges r;
  r.num_classes = a.num_classes;
  r.width = a.feature_height() * a.feature_width() * a.feature_channels + a.penultimate_size();
  r.lo.assign(r.num_classes * r.width, std::numeric_limits<double>::infinity());
  r.hi.assign(r.num_classes * r.width, -std::numeric_limits<double>::infinity());
  r.calibrated.assign(r.num_classes, 0);
  std::vector<std::vector<double>> monitored(train.size());
  ParallelFor(train.size(), [&](std::size_t n) {
    monitored[n] = MonitoredActivations(model.Forward(train.images[n]));
  });
  for (std::size_t n = 0; n < train.size(); ++n) {
    const Image& image = train.images[n];
    Require(image.label && *image.label < r.num_classes, Errc::kInvalidArgument,
            "fnrd_calibrate: training image without a valid label");
    const std::uint32_t c = *image.label;
    r.calibrated[c] = 1;
    for (std::size_t k = 0; k < r.width; ++k) {
      r.lo[c * r.width + k] = std::min(r.lo[c * r.width + k], monitored[n][k]);
      r.hi[c * r.width + k] = std::max(r.hi[c * r.width + k], monitored[n][k]);
    }
  }
  return r;
}

double FnrdScore(const FnrdRanges& ranges, std::uint32_t cls, std::span<const double> monitored) {
  Require(cls < ranges.num_classes && ranges.calibrated.size() == ranges.num_classes &&
              ranges.calibrated[cls],
          Errc::kState, "FNRD ranges are not calibrated for class " + std::to_string(cls));
  Require(monitored.size() == ranges.width, Errc::kDimensionMismatch,
          "FNRD expects " + std::to_string(ranges.width) + " monitored neurons, got " +
              std::to_string(monitored.size()));
  std::size_t outside = 0;
  for (std::size_t k = 0; k < ranges.width; ++k) {
    const double v = monitored[k];
    if (v < ranges.lo[cls * ranges.width + k] || v > ranges.hi[cls * ranges.width + k]) ++outside;
  }
  return 1.0 - static_cast<double>(outside) / static_cast<double>(ranges.width);
}

double FnrdScore(const Classifier& model, const FnrdRanges& ranges, const Image& image) {
  const Activations act = model.Forward(image);
  return FnrdScore(ranges, static_cast<std::uint32_t>(ArgMax(act.logits)),
                   MonitoredActivations(act));
}

namespace {

class CodeScorer final : public Scorer {
 public:
  CodeScorer(const DetectorBank& bank, const CalibrationStats& stats, CodeMode mode)
      : bank_(bank), stats_(stats), mode_(mode) {
    CheckCalibrated(bank_, stats_);
  }
  std::string name() const override { return mode_ == CodeMode::kWeighted ? "code" : "code_top1"; }
  double Score(const Activations& act) const override {
    return CodeConfidence(bank_, stats_, act.features, act.logits, mode_);
  }

 private:
  const DetectorBank& bank_;
  const CalibrationStats& stats_;
  CodeMode mode_;
};

class BaselineScorer final : public Scorer {
 public:
  BaselineScorer(Baseline method, std::string name) : method_(method), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  double Score(const Activations& act) const override { return BaselineScore(method_, act.logits); }

 private:
  Baseline method_;
  std::string name_;
};

class FnrdScorer final : public Scorer {
 public:
  explicit FnrdScorer(const FnrdRanges& ranges) : ranges_(ranges) {}
  std::string name() const override { return "fnrd"; }
  double Score(const Activations& act) const override {
    return FnrdScore(ranges_, static_cast<std::uint32_t>(ArgMax(act.logits)),
                     MonitoredActivations(act));
  }

 private:
  const FnrdRanges& ranges_;
};

class ConstantScorer final : public Scorer {
 public:
  std::string name() const override { return "constant"; }
  double Score(const Activations&) const override { return 0.5; }
};

}  // namespace

const std::vector<std::string>& ScorerNames() {
  static const std::vector<std::string> names = {"code", "code_top1", "msp",     "maxlogit",
                                                 "energy", "fnrd",    "constant"};
  return names;
}

std::unique_ptr<Scorer> MakeScorer(std::string_view name, const ScorerResources& res) {
  if (name == "code" || name == "code_top1") {
    Require(res.bank && res.stats, Errc::kState,
            std::string(name) + " scorer needs a detector bank and calibration stats");
    return std::make_unique<CodeScorer>(*res.bank, *res.stats,
                                        name == "code" ? CodeMode::kWeighted : CodeMode::kTop1);
  }
  if (name == "msp") return std::make_unique<BaselineScorer>(Baseline::kMsp, "msp");
  if (name == "maxlogit") return std::make_unique<BaselineScorer>(Baseline::kMaxLogit, "maxlogit");
  if (name == "energy") return std::make_unique<BaselineScorer>(Baseline::kEnergy, "energy");
  if (name == "fnrd") {
    Require(res.fnrd != nullptr, Errc::kState, "fnrd scorer needs calibrated FNRD ranges");
    return std::make_unique<FnrdScorer>(*res.fnrd);
  }
  if (name == "constant") return std::make_unique<ConstantScorer>();
  Fail(Errc::kInvalidArgument, "unknown scorer '" + std::string(name) + "'");
}

std::vector<std::vector<double>> ScoreImages(const Classifier& model,
                                             std::span<const Scorer* const> scorers,
                                             std::span<const Image> images) {
  std::vector<std::vector<double>> scores(scorers.size(), std::vector<double>(images.size()));
  ParallelFor(images.size(), [&](std::size_t n) {
    const Activations act = model.Forward(images[n]);
    for (std::size_t s = 0; s < scorers.size(); ++s) scores[s][n] = scorers[s]->Score(act);
  });
  return scores;
}

}  // namespace codeood
