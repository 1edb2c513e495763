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

#include "codeood/codeood.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "codeood/classifier.hpp"
#include "codeood/confidence.hpp"
#include "codeood/dataset.hpp"
#include "codeood/detector.hpp"
#include "codeood/error.hpp"
#include "codeood/explain.hpp"
#include "codeood/feature_set.hpp"
#include "codeood/image.hpp"
#include "codeood/metrics.hpp"
#include "codeood/osr.hpp"
#include "codeood/parallel.hpp"
#include "codeood/perturbation.hpp"
#include "codeood/rng.hpp"
#include "json.hpp"

struct codeood_dataset {
  codeood::Dataset value;
};
struct codeood_classifier {
  codeood::Classifier value;
};
struct codeood_features {
  codeood::FeatureSet value;
};
struct codeood_detectors {
  codeood::DetectorBank value;
};
struct codeood_calibration {
  codeood::CalibrationStats value;
};
struct codeood_fnrd {
  codeood::FnrdRanges value;
};
struct codeood_scorer {
  std::unique_ptr<codeood::Scorer> value;
};
struct codeood_prototypes {
  std::vector<codeood::Prototype> value;
};

namespace {

using codeood::Errc;

thread_local std::string g_last_error;

codeood_status StatusOf(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument:
      return CODEOOD_INVALID_ARGUMENT;
    case Errc::kDimensionMismatch:
      return CODEOOD_DIMENSION_MISMATCH;
    case Errc::kIo:
      return CODEOOD_IO_ERROR;
    case Errc::kFormat:
      return CODEOOD_FORMAT_ERROR;
    case Errc::kState:
      return CODEOOD_STATE_ERROR;
  }
  return CODEOOD_INTERNAL_ERROR;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
codeood_status Guard(Fn&& fn) {
  try {
    fn();
    return CODEOOD_OK;
  } catch (const codeood::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CODEOOD_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CODEOOD_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return CODEOOD_INTERNAL_ERROR;
  }
}

void NotNull(const void* p, const char* what) {
  codeood::Require(p != nullptr, Errc::kInvalidArgument, std::string(what) + " is null");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> SplitNames(const char* list) {
  std::vector<std::string> names;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
  }
  codeood::Require(!names.empty(), Errc::kInvalidArgument, "empty scorer list");
  return names;
}

codeood::ClassifierConfig ToCore(const codeood_classifier_config& c) {
  codeood::ClassifierConfig out;
  out.conv1_channels = c.conv1_channels;
  out.feature_channels = c.feature_channels;
  out.hidden_units = c.hidden_units;
  out.epochs = c.epochs;
  out.batch_size = c.batch_size;
  out.learning_rate = c.learning_rate;
  out.momentum = c.momentum;
  out.seed = c.seed;
  return out;
}

codeood::DetectorParams ParamsOf(const codeood_detector_config& c) {
  codeood::DetectorParams out;
  out.per_class = c.per_class;
  out.lambda_u = c.lambda_u;
  out.threshold = c.threshold;
  return out;
}

codeood::DetectorTrainConfig TrainingOf(const codeood_detector_config& c) {
  codeood::DetectorTrainConfig out;
  out.learning_rate = c.learning_rate;
  out.weight_decay = c.weight_decay;
  out.epochs = c.epochs;
  out.batch_size = c.batch_size;
  out.rho = c.rho;
  out.epsilon = c.epsilon;
  out.seed = c.seed;
  out.threads = c.threads;
  return out;
}

std::vector<const codeood::Scorer*> Unwrap(const codeood_scorer* const* scorers, size_t n) {
  NotNull(scorers, "scorers");
  codeood::Require(n > 0, Errc::kInvalidArgument, "at least one scorer is required");
  std::vector<const codeood::Scorer*> out;
  for (size_t s = 0; s < n; ++s) {
    NotNull(scorers[s], "scorer");
    out.push_back(scorers[s]->value.get());
  }
  return out;
}

const codeood::Image& ImageAt(const codeood_dataset* dataset, size_t index) {
  NotNull(dataset, "dataset");
  codeood::Require(index < dataset->value.size(), Errc::kInvalidArgument,
                   "image index " + std::to_string(index) + " out of range (dataset has " +
                       std::to_string(dataset->value.size()) + " images)");
  return dataset->value.images[index];
}

}  // namespace

extern "C" {

const char* codeood_version(void) { return "0.1.0"; }

const char* codeood_last_error(void) { return g_last_error.c_str(); }

const char* codeood_status_name(codeood_status status) {
  switch (status) {
    case CODEOOD_OK:
      return "ok";
    case CODEOOD_INVALID_ARGUMENT:
      return "invalid argument";
    case CODEOOD_DIMENSION_MISMATCH:
      return "dimension mismatch";
    case CODEOOD_IO_ERROR:
      return "io error";
    case CODEOOD_FORMAT_ERROR:
      return "format error";
    case CODEOOD_STATE_ERROR:
      return "state error";
    case CODEOOD_INTERNAL_ERROR:
      return "internal error";
  }
  return "unknown status";
}

void codeood_string_free(char* str) { std::free(str); }

// Datasets.

void codeood_synthetic_params_default(codeood_synthetic_params* params) {
  if (params == nullptr) return;
  const codeood::SyntheticParams d;
  *params = {d.classes, d.size, d.train_per_class, d.test_per_class, d.background_noise, d.seed};
}

codeood_status codeood_dataset_synthetic(const codeood_synthetic_params* params,
                                         codeood_dataset** train, codeood_dataset** test) {
  return Guard([&] {
    NotNull(params, "params");
    NotNull(train, "train");
    NotNull(test, "test");
    codeood::SyntheticParams p;
    p.classes = params->classes;
    p.size = params->size;
    p.train_per_class = params->train_per_class;
    p.test_per_class = params->test_per_class;
    p.background_noise = params->background_noise;
    p.seed = params->seed;
    codeood::SyntheticData data = codeood::GenerateSynthetic(p);
    auto tr = std::make_unique<codeood_dataset>(codeood_dataset{std::move(data.train)});
    auto te = std::make_unique<codeood_dataset>(codeood_dataset{std::move(data.test)});
    *train = tr.release();
    *test = te.release();
  });
}

codeood_status codeood_dataset_load_idx(const char* images_path, const char* labels_path,
                                        codeood_dataset** out) {
  return Guard([&] {
    NotNull(images_path, "images_path");
    NotNull(labels_path, "labels_path");
    NotNull(out, "out");
    *out = new codeood_dataset{codeood::ReadIdx(images_path, labels_path)};
  });
}

codeood_status codeood_dataset_save_idx(const codeood_dataset* dataset, const char* images_path,
                                        const char* labels_path) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(images_path, "images_path");
    NotNull(labels_path, "labels_path");
    codeood::WriteIdx(dataset->value, images_path, labels_path);
  });
}

codeood_status codeood_dataset_select(const codeood_dataset* dataset, const uint32_t* classes,
                                      size_t count, int relabel, codeood_dataset** out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    codeood::Require(count > 0 && classes != nullptr, Errc::kInvalidArgument,
                     "class selection is empty");
    *out = new codeood_dataset{codeood::SelectClasses(
        dataset->value, std::span<const uint32_t>(classes, count), relabel != 0)};
  });
}

codeood_status codeood_dataset_subsample(const codeood_dataset* dataset, size_t count,
                                         codeood_dataset** out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    codeood::Require(count > 0, Errc::kInvalidArgument, "subsample count must be positive");
    const codeood::Dataset& src = dataset->value;
    codeood::Dataset sub;
    sub.num_classes = src.num_classes;
    if (count >= src.size()) {
      sub.images = src.images;
    } else {
      for (size_t k = 0; k < count; ++k) sub.images.push_back(src.images[k * src.size() / count]);
    }
    *out = new codeood_dataset{std::move(sub)};
  });
}

codeood_status codeood_dataset_uniform_noise(size_t count, size_t channels, size_t height,
                                             size_t width, uint64_t seed,
                                             codeood_dataset** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new codeood_dataset{
        codeood::UniformNoiseImages(count, channels, height, width, seed)};
  });
}

codeood_status codeood_dataset_perturb(const codeood_dataset* dataset, const char* kind,
                                       double alpha, uint64_t seed, codeood_dataset** out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(kind, "kind");
    NotNull(out, "out");
    codeood::PerturbationSpec spec{codeood::ParseKind(kind), alpha, seed};
    spec.Validate();
    codeood::Dataset result;
    result.num_classes = dataset->value.num_classes;
    const auto& images = dataset->value.images;
    for (size_t n = 0; n < images.size(); ++n) {
      codeood::PerturbationSpec image_spec = spec;
      image_spec.seed = codeood::MixSeed(seed, n);
      result.images.push_back(codeood::ApplyPerturbation(images[n], image_spec));
    }
    *out = new codeood_dataset{std::move(result)};
  });
}

codeood_status codeood_dataset_info(const codeood_dataset* dataset, size_t* count,
                                    uint32_t* num_classes, size_t* channels, size_t* height,
                                    size_t* width) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    const codeood::Dataset& d = dataset->value;
    if (count) *count = d.size();
    if (num_classes) *num_classes = d.num_classes;
    const codeood::Image* first = d.empty() ? nullptr : &d.images.front();
    if (channels) *channels = first ? first->channels : 0;
    if (height) *height = first ? first->height : 0;
    if (width) *width = first ? first->width : 0;
  });
}

codeood_status codeood_dataset_write_pgm(const codeood_dataset* dataset, size_t index,
                                         const char* path) {
  return Guard([&] {
    NotNull(path, "path");
    codeood::WritePgm(ImageAt(dataset, index), path);
  });
}

void codeood_dataset_free(codeood_dataset* dataset) { delete dataset; }

// Classifier.

void codeood_classifier_config_default(codeood_classifier_config* config) {
  if (config == nullptr) return;
  const codeood::ClassifierConfig d;
  *config = {d.conv1_channels, d.feature_channels, d.hidden_units, d.epochs,
             d.batch_size,     d.learning_rate,    d.momentum,     d.seed};
}

codeood_status codeood_classifier_train(const codeood_dataset* train,
                                        const codeood_classifier_config* config,
                                        codeood_classifier** out, double* final_loss) {
  return Guard([&] {
    NotNull(train, "train");
    NotNull(config, "config");
    NotNull(out, "out");
    std::vector<double> losses;
    codeood::Classifier model = codeood::TrainClassifier(train->value, ToCore(*config), &losses);
    model.Freeze();
    if (final_loss) *final_loss = losses.empty() ? 0.0 : losses.back();
    *out = new codeood_classifier{std::move(model)};
  });
}

codeood_status codeood_classifier_save(const codeood_classifier* model, const char* path) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(path, "path");
    model->value.Save(path);
  });
}

codeood_status codeood_classifier_load(const char* path, codeood_classifier** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    codeood::Classifier model = codeood::Classifier::Load(path);
    model.Freeze();
    *out = new codeood_classifier{std::move(model)};
  });
}

codeood_status codeood_classifier_accuracy(const codeood_classifier* model,
                                           const codeood_dataset* dataset, double* accuracy) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(accuracy, "accuracy");
    *accuracy = codeood::Accuracy(model->value, dataset->value);
  });
}

codeood_status codeood_classifier_checksum(const codeood_classifier* model, uint64_t* checksum) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(checksum, "checksum");
    *checksum = model->value.Checksum();
  });
}

codeood_status codeood_classifier_predict(const codeood_classifier* model,
                                          const codeood_dataset* dataset, uint32_t* labels,
                                          size_t capacity) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(labels, "labels");
    const auto& images = dataset->value.images;
    codeood::Require(capacity >= images.size(), Errc::kInvalidArgument,
                     "label buffer too small");
    codeood::ParallelFor(images.size(),
                         [&](size_t n) { labels[n] = model->value.Predict(images[n]); });
  });
}

void codeood_classifier_free(codeood_classifier* model) { delete model; }

// Feature sets.

codeood_status codeood_features_extract(const codeood_classifier* model,
                                        const codeood_dataset* dataset, codeood_features** out) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    *out = new codeood_features{codeood::ExtractFeatureSet(model->value, dataset->value)};
  });
}

codeood_status codeood_features_save(const codeood_features* features, const char* path) {
  return Guard([&] {
    NotNull(features, "features");
    NotNull(path, "path");
    codeood::SaveFeatureSet(features->value, path);
  });
}

codeood_status codeood_features_load(const char* path, codeood_features** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new codeood_features{codeood::LoadFeatureSet(path)};
  });
}

codeood_status codeood_features_info(const codeood_features* features, size_t* count,
                                     uint32_t* height, uint32_t* width, uint32_t* depth,
                                     uint32_t* num_classes) {
  return Guard([&] {
    NotNull(features, "features");
    const codeood::FeatureSet& f = features->value;
    if (count) *count = f.size();
    if (height) *height = f.height;
    if (width) *width = f.width;
    if (depth) *depth = f.depth;
    if (num_classes) *num_classes = f.num_classes;
  });
}

void codeood_features_free(codeood_features* features) { delete features; }

// Detectors.

void codeood_detector_config_default(codeood_detector_config* config) {
  if (config == nullptr) return;
  const codeood::DetectorParams p;
  const codeood::DetectorTrainConfig t;
  *config = {p.per_class, p.lambda_u,     p.threshold, t.learning_rate,
             t.weight_decay, t.epochs,    t.batch_size, t.rho,
             t.epsilon,   t.seed,         t.threads};
}

codeood_status codeood_detectors_train(const codeood_features* train,
                                       const codeood_detector_config* config,
                                       codeood_detectors** out) {
  return Guard([&] {
    NotNull(train, "train");
    NotNull(config, "config");
    NotNull(out, "out");
    *out = new codeood_detectors{
        codeood::TrainDetectors(train->value, ParamsOf(*config), TrainingOf(*config))};
  });
}

codeood_status codeood_detectors_save(const codeood_detectors* bank, const char* path) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(path, "path");
    bank->value.Save(path);
  });
}

codeood_status codeood_detectors_load(const char* path, codeood_detectors** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new codeood_detectors{codeood::DetectorBank::Load(path)};
  });
}

codeood_status codeood_detectors_info(const codeood_detectors* bank, uint32_t* num_classes,
                                      size_t* per_class, size_t* depth) {
  return Guard([&] {
    NotNull(bank, "bank");
    if (num_classes) *num_classes = bank->value.num_classes();
    if (per_class) *per_class = bank->value.per_class();
    if (depth) *depth = bank->value.depth();
  });
}

codeood_status codeood_detectors_loss(const codeood_detectors* bank,
                                      const codeood_features* features, double* locality,
                                      double* unicity, double* total) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(features, "features");
    const auto batch = codeood::AsBatch(features->value);
    if (locality) *locality = codeood::LocalityLoss(bank->value, batch);
    if (unicity) *unicity = codeood::UnicityLoss(bank->value, batch);
    if (total) *total = codeood::TotalLoss(bank->value, batch);
  });
}

void codeood_detectors_free(codeood_detectors* bank) { delete bank; }

// Calibration.

codeood_status codeood_calibrate(const codeood_detectors* bank, const codeood_features* train,
                                 double sigma_floor, codeood_calibration** out) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(train, "train");
    NotNull(out, "out");
    *out = new codeood_calibration{codeood::Calibrate(bank->value, train->value, sigma_floor)};
  });
}

codeood_status codeood_calibration_save(const codeood_calibration* stats, const char* path) {
  return Guard([&] {
    NotNull(stats, "stats");
    NotNull(path, "path");
    stats->value.Save(path);
  });
}

codeood_status codeood_calibration_load(const char* path, codeood_calibration** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new codeood_calibration{codeood::CalibrationStats::Load(path)};
  });
}

void codeood_calibration_free(codeood_calibration* stats) { delete stats; }

codeood_status codeood_fnrd_calibrate(const codeood_classifier* model,
                                      const codeood_dataset* train, codeood_fnrd** out) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(train, "train");
    NotNull(out, "out");
    *out = new codeood_fnrd{codeood::FnrdCalibrate(model->value, train->value)};
  });
}

codeood_status codeood_fnrd_save(const codeood_fnrd* ranges, const char* path) {
  return Guard([&] {
    NotNull(ranges, "ranges");
    NotNull(path, "path");
    ranges->value.Save(path);
  });
}

codeood_status codeood_fnrd_load(const char* path, codeood_fnrd** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new codeood_fnrd{codeood::FnrdRanges::Load(path)};
  });
}

void codeood_fnrd_free(codeood_fnrd* ranges) { delete ranges; }

// Scorers.

codeood_status codeood_scorer_create(const char* name, const codeood_detectors* bank,
                                     const codeood_calibration* stats, const codeood_fnrd* fnrd,
                                     codeood_scorer** out) {
  return Guard([&] {
    NotNull(name, "name");
    NotNull(out, "out");
    codeood::ScorerResources resources;
    resources.bank = bank ? &bank->value : nullptr;
    resources.stats = stats ? &stats->value : nullptr;
    resources.fnrd = fnrd ? &fnrd->value : nullptr;
    *out = new codeood_scorer{codeood::MakeScorer(name, resources)};
  });
}

const char* codeood_scorer_names(void) {
  static const std::string names = [] {
    std::string joined;
    for (const std::string& n : codeood::ScorerNames()) {
      if (!joined.empty()) joined += ',';
      joined += n;
    }
    return joined;
  }();
  return names.c_str();
}

codeood_status codeood_score_dataset(const codeood_classifier* model,
                                     const codeood_scorer* const* scorers, size_t n_scorers,
                                     const codeood_dataset* dataset, double* scores,
                                     size_t capacity) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(scores, "scores");
    const auto unwrapped = Unwrap(scorers, n_scorers);
    const size_t count = dataset->value.size();
    codeood::Require(capacity >= n_scorers * count, Errc::kInvalidArgument,
                     "score buffer too small");
    const auto result = codeood::ScoreImages(model->value, unwrapped, dataset->value.images);
    for (size_t s = 0; s < n_scorers; ++s) {
      std::copy(result[s].begin(), result[s].end(), scores + s * count);
    }
  });
}

void codeood_scorer_free(codeood_scorer* scorer) { delete scorer; }

// Metrics.

codeood_status codeood_ood_metrics_compute(const double* id_scores, size_t n_id,
                                           const double* ood_scores, size_t n_ood,
                                           codeood_ood_metrics* out) {
  return Guard([&] {
    NotNull(out, "out");
    codeood::Require(n_id > 0 && n_ood > 0 && id_scores && ood_scores,
                     Errc::kInvalidArgument, "metrics need ID and OoD scores");
    const auto samples = codeood::MakeSamples(std::span<const double>(id_scores, n_id),
                                              std::span<const double>(ood_scores, n_ood));
    out->auroc = codeood::Auroc(samples);
    out->aupr = codeood::Aupr(samples);
    out->fpr95 = codeood::FprAt95Tpr(samples);
  });
}

codeood_status codeood_spearman(const double* xs, const double* ys, size_t n, double* value,
                                int* degenerate) {
  return Guard([&] {
    NotNull(xs, "xs");
    NotNull(ys, "ys");
    NotNull(value, "value");
    const codeood::Correlation c =
        codeood::Spearman(std::span<const double>(xs, n), std::span<const double>(ys, n));
    *value = c.value;
    if (degenerate) *degenerate = c.degenerate ? 1 : 0;
  });
}

// Perturbations.

codeood_status codeood_perturbation_default_grid(const char* kind, double* alphas,
                                                 size_t capacity, size_t* count) {
  return Guard([&] {
    NotNull(kind, "kind");
    NotNull(count, "count");
    const auto grid = codeood::DefaultGrid(codeood::ParseKind(kind));
    *count = grid.size();
    if (alphas != nullptr) {
      for (size_t a = 0; a < grid.size() && a < capacity; ++a) alphas[a] = grid[a];
    }
  });
}

codeood_status codeood_perturbation_intensity_direction(const char* kind, int* direction) {
  return Guard([&] {
    NotNull(kind, "kind");
    NotNull(direction, "direction");
    *direction = codeood::IntensityDirection(codeood::ParseKind(kind));
  });
}

codeood_status codeood_perturbation_sweep(const codeood_classifier* model,
                                          const codeood_scorer* const* scorers, size_t n_scorers,
                                          const codeood_dataset* dataset, const char* kind,
                                          const double* alphas, size_t n_alphas, uint64_t seed,
                                          double* confidences, double* srcc, int* degenerate) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(dataset, "dataset");
    NotNull(kind, "kind");
    NotNull(alphas, "alphas");
    NotNull(confidences, "confidences");
    const auto unwrapped = Unwrap(scorers, n_scorers);
    const auto sweeps = codeood::PerturbationSweep(
        model->value, unwrapped, dataset->value.images, codeood::ParseKind(kind),
        std::span<const double>(alphas, n_alphas), seed);
    for (size_t s = 0; s < sweeps.size(); ++s) {
      std::copy(sweeps[s].expected_confidences.begin(), sweeps[s].expected_confidences.end(),
                confidences + s * n_alphas);
      if (srcc) srcc[s] = sweeps[s].srcc;
      if (degenerate) degenerate[s] = sweeps[s].degenerate ? 1 : 0;
    }
  });
}

// Explanations.

codeood_status codeood_prototypes_extract(const codeood_detectors* bank,
                                          const codeood_calibration* stats,
                                          const codeood_features* train,
                                          codeood_prototypes** out) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(stats, "stats");
    NotNull(train, "train");
    NotNull(out, "out");
    *out = new codeood_prototypes{
        codeood::ExtractPrototypes(bank->value, stats->value, train->value)};
  });
}

void codeood_prototypes_free(codeood_prototypes* prototypes) { delete prototypes; }

codeood_status codeood_explain(const codeood_detectors* bank, const codeood_calibration* stats,
                               const codeood_classifier* model,
                               const codeood_prototypes* prototypes,
                               const codeood_dataset* dataset, size_t index, double threshold,
                               char** json) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(stats, "stats");
    NotNull(model, "model");
    NotNull(prototypes, "prototypes");
    NotNull(json, "json");
    const codeood::Explanation e = codeood::Explain(bank->value, stats->value, model->value,
                                                    ImageAt(dataset, index), prototypes->value,
                                                    threshold);
    *json = CopyString(codeood::ExplanationJson(e));
  });
}

codeood_status codeood_explain_dump_patches(const codeood_detectors* bank,
                                            const codeood_calibration* stats,
                                            const codeood_classifier* model,
                                            const codeood_prototypes* prototypes,
                                            const codeood_dataset* train,
                                            const codeood_dataset* dataset, size_t index,
                                            double threshold, const char* prefix,
                                            size_t* written) {
  return Guard([&] {
    NotNull(bank, "bank");
    NotNull(stats, "stats");
    NotNull(model, "model");
    NotNull(prototypes, "prototypes");
    NotNull(train, "train");
    NotNull(prefix, "prefix");
    const codeood::Image& image = ImageAt(dataset, index);
    const codeood::Explanation e = codeood::Explain(bank->value, stats->value, model->value,
                                                    image, prototypes->value, threshold);
    const codeood::Classifier& m = model->value;
    size_t files = 0;
    for (const codeood::DetectorEvidence& d : e.detectors) {
      if (!d.present) continue;
      const codeood::CorrelationPeak peak = codeood::MaxCorrelationPeak(
          bank->value, e.predicted_class, d.detector, m.ExtractFeatures(image));
      codeood::WritePgm(codeood::CropReceptiveField(m, image, peak.h, peak.w),
                        std::string(prefix) + "_detector" + std::to_string(d.detector) + ".pgm");
      ++files;
    }
    for (const codeood::Prototype& p : e.prototypes) {
      const codeood::Image& source = ImageAt(train, p.sample_index);
      codeood::WritePgm(codeood::CropReceptiveField(m, source, p.feature_h, p.feature_w),
                        std::string(prefix) + "_prototype" + std::to_string(p.detector) + ".pgm");
      ++files;
    }
    if (written) *written = files;
  });
}

// Open-set recognition.

void codeood_osr_config_default(codeood_osr_config* config) {
  if (config == nullptr) return;
  const codeood::OsrConfig d;
  config->closed_classes = d.closed_classes;
  config->splits = d.splits;
  config->seed = d.seed;
  codeood_classifier_config_default(&config->classifier);
  codeood_detector_config_default(&config->detector);
  config->scorers = nullptr;
}

codeood_status codeood_osr_splits(uint32_t num_classes, uint32_t closed_classes, uint32_t splits,
                                  uint64_t seed, uint32_t* closed, size_t capacity) {
  return Guard([&] {
    NotNull(closed, "closed");
    const auto draws = codeood::OsrSplits(num_classes, closed_classes, splits, seed);
    codeood::Require(capacity >= static_cast<size_t>(splits) * closed_classes,
                     Errc::kInvalidArgument, "split buffer too small");
    for (size_t s = 0; s < draws.size(); ++s) {
      std::copy(draws[s].begin(), draws[s].end(), closed + s * closed_classes);
    }
  });
}

codeood_status codeood_osr_evaluate(const codeood_dataset* train, const codeood_dataset* test,
                                    const codeood_osr_config* config, char** json) {
  return Guard([&] {
    NotNull(train, "train");
    NotNull(test, "test");
    NotNull(config, "config");
    NotNull(json, "json");
    codeood::OsrConfig cfg;
    cfg.closed_classes = config->closed_classes;
    cfg.splits = config->splits;
    cfg.seed = config->seed;
    cfg.classifier = ToCore(config->classifier);
    cfg.detector = ParamsOf(config->detector);
    cfg.detector_training = TrainingOf(config->detector);
    cfg.scorers = SplitNames(config->scorers ? config->scorers : "code");
    const codeood::OsrResult result = codeood::OsrEvaluate(train->value, test->value, cfg);

    nlohmann::ordered_json j;
    j["scorers"] = result.scorers;
    j["splits"] = nlohmann::ordered_json::array();
    for (const codeood::OsrSplitResult& s : result.splits) {
      nlohmann::ordered_json item;
      item["closed"] = s.closed;
      item["open"] = s.open;
      item["accuracy"] = s.classifier_accuracy;
      item["auroc"] = s.auroc;
      j["splits"].push_back(item);
    }
    j["mean_auroc"] = result.mean_auroc;
    *json = CopyString(j.dump());
  });
}

}  // extern "C"
