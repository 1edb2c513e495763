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

#ifndef CODEOOD_CODEOOD_H_
#define CODEOOD_CODEOOD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CODEOOD_BUILDING_LIBRARY)
#define CODEOOD_API __attribute__((visibility("default")))
#else
#define CODEOOD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

// Every fallible call returns a status; on failure a description of the
// most recent error on the calling thread is available from
// codeood_last_error() until the next failing call on that thread.
typedef enum codeood_status {
  CODEOOD_OK = 0,
  CODEOOD_INVALID_ARGUMENT = 1,
  CODEOOD_DIMENSION_MISMATCH = 2,
  CODEOOD_IO_ERROR = 3,
  CODEOOD_FORMAT_ERROR = 4,
  CODEOOD_STATE_ERROR = 5,
  CODEOOD_INTERNAL_ERROR = 6,
} codeood_status;

typedef struct codeood_dataset codeood_dataset;
typedef struct codeood_classifier codeood_classifier;
typedef struct codeood_features codeood_features;
typedef struct codeood_detectors codeood_detectors;
typedef struct codeood_calibration codeood_calibration;
typedef struct codeood_fnrd codeood_fnrd;
typedef struct codeood_scorer codeood_scorer;
typedef struct codeood_prototypes codeood_prototypes;

CODEOOD_API const char* codeood_version(void);
CODEOOD_API const char* codeood_last_error(void);
CODEOOD_API const char* codeood_status_name(codeood_status status);
// Releases strings returned through char** out-parameters.
CODEOOD_API void codeood_string_free(char* str);

// ---------------------------------------------------------------------------
// Datasets

typedef struct codeood_synthetic_params {
  uint32_t classes;
  uint32_t size;
  uint32_t train_per_class;
  uint32_t test_per_class;
  double background_noise;
  uint64_t seed;
} codeood_synthetic_params;

CODEOOD_API void codeood_synthetic_params_default(codeood_synthetic_params* params);
CODEOOD_API codeood_status codeood_dataset_synthetic(const codeood_synthetic_params* params,
                                                     codeood_dataset** train,
                                                     codeood_dataset** test);
CODEOOD_API codeood_status codeood_dataset_load_idx(const char* images_path,
                                                    const char* labels_path,
                                                    codeood_dataset** out);
CODEOOD_API codeood_status codeood_dataset_save_idx(const codeood_dataset* dataset,
                                                    const char* images_path,
                                                    const char* labels_path);
// Keeps the listed classes; with relabel != 0, classes[j] becomes label j.
CODEOOD_API codeood_status codeood_dataset_select(const codeood_dataset* dataset,
                                                  const uint32_t* classes, size_t count,
                                                  int relabel, codeood_dataset** out);
// `count` evenly spaced images (all images when count >= size).
CODEOOD_API codeood_status codeood_dataset_subsample(const codeood_dataset* dataset,
                                                     size_t count, codeood_dataset** out);
CODEOOD_API codeood_status codeood_dataset_uniform_noise(size_t count, size_t channels,
                                                         size_t height, size_t width,
                                                         uint64_t seed, codeood_dataset** out);
// Every image perturbed; image n uses noise seed mix(seed, n).
CODEOOD_API codeood_status codeood_dataset_perturb(const codeood_dataset* dataset,
                                                   const char* kind, double alpha, uint64_t seed,
                                                   codeood_dataset** out);
CODEOOD_API codeood_status codeood_dataset_info(const codeood_dataset* dataset, size_t* count,
                                                uint32_t* num_classes, size_t* channels,
                                                size_t* height, size_t* width);
CODEOOD_API codeood_status codeood_dataset_write_pgm(const codeood_dataset* dataset, size_t index,
                                                     const char* path);
CODEOOD_API void codeood_dataset_free(codeood_dataset* dataset);

// ---------------------------------------------------------------------------
// Classifier

typedef struct codeood_classifier_config {
  size_t conv1_channels;
  size_t feature_channels;
  size_t hidden_units;
  size_t epochs;
  size_t batch_size;  // 0 = full batch
  double learning_rate;
  double momentum;
  uint64_t seed;
} codeood_classifier_config;

CODEOOD_API void codeood_classifier_config_default(codeood_classifier_config* config);
// The returned model is frozen. `final_loss` (optional) receives the mean
// loss of the last epoch.
CODEOOD_API codeood_status codeood_classifier_train(const codeood_dataset* train,
                                                    const codeood_classifier_config* config,
                                                    codeood_classifier** out,
                                                    double* final_loss);
CODEOOD_API codeood_status codeood_classifier_save(const codeood_classifier* model,
                                                   const char* path);
// Loaded models are frozen.
CODEOOD_API codeood_status codeood_classifier_load(const char* path, codeood_classifier** out);
CODEOOD_API codeood_status codeood_classifier_accuracy(const codeood_classifier* model,
                                                       const codeood_dataset* dataset,
                                                       double* accuracy);
CODEOOD_API codeood_status codeood_classifier_checksum(const codeood_classifier* model,
                                                       uint64_t* checksum);
CODEOOD_API codeood_status codeood_classifier_predict(const codeood_classifier* model,
                                                      const codeood_dataset* dataset,
                                                      uint32_t* labels, size_t capacity);
CODEOOD_API void codeood_classifier_free(codeood_classifier* model);

// ---------------------------------------------------------------------------
// Feature sets (frozen-backbone outputs)

CODEOOD_API codeood_status codeood_features_extract(const codeood_classifier* model,
                                                    const codeood_dataset* dataset,
                                                    codeood_features** out);
CODEOOD_API codeood_status codeood_features_save(const codeood_features* features,
                                                 const char* path);
CODEOOD_API codeood_status codeood_features_load(const char* path, codeood_features** out);
CODEOOD_API codeood_status codeood_features_info(const codeood_features* features, size_t* count,
                                                 uint32_t* height, uint32_t* width,
                                                 uint32_t* depth, uint32_t* num_classes);
CODEOOD_API void codeood_features_free(codeood_features* features);

// ---------------------------------------------------------------------------
// Pattern detectors

typedef struct codeood_detector_config {
  size_t per_class;
  double lambda_u;
  double threshold;
  double learning_rate;
  double weight_decay;
  size_t epochs;
  size_t batch_size;  // 0 = full batch
  double rho;
  double epsilon;
  uint64_t seed;
  size_t threads;  // 0 = CODEOOD_THREADS or hardware concurrency
} codeood_detector_config;

CODEOOD_API void codeood_detector_config_default(codeood_detector_config* config);
CODEOOD_API codeood_status codeood_detectors_train(const codeood_features* train,
                                                   const codeood_detector_config* config,
                                                   codeood_detectors** out);
CODEOOD_API codeood_status codeood_detectors_save(const codeood_detectors* bank,
                                                  const char* path);
CODEOOD_API codeood_status codeood_detectors_load(const char* path, codeood_detectors** out);
CODEOOD_API codeood_status codeood_detectors_info(const codeood_detectors* bank,
                                                  uint32_t* num_classes, size_t* per_class,
                                                  size_t* depth);
// Locality, unicity and total loss over a feature set.
CODEOOD_API codeood_status codeood_detectors_loss(const codeood_detectors* bank,
                                                  const codeood_features* features,
                                                  double* locality, double* unicity,
                                                  double* total);
CODEOOD_API void codeood_detectors_free(codeood_detectors* bank);

// ---------------------------------------------------------------------------
// Calibration and baselines

CODEOOD_API codeood_status codeood_calibrate(const codeood_detectors* bank,
                                             const codeood_features* train, double sigma_floor,
                                             codeood_calibration** out);
CODEOOD_API codeood_status codeood_calibration_save(const codeood_calibration* stats,
                                                    const char* path);
CODEOOD_API codeood_status codeood_calibration_load(const char* path,
                                                    codeood_calibration** out);
CODEOOD_API void codeood_calibration_free(codeood_calibration* stats);

CODEOOD_API codeood_status codeood_fnrd_calibrate(const codeood_classifier* model,
                                                  const codeood_dataset* train,
                                                  codeood_fnrd** out);
CODEOOD_API codeood_status codeood_fnrd_save(const codeood_fnrd* ranges, const char* path);
CODEOOD_API codeood_status codeood_fnrd_load(const char* path, codeood_fnrd** out);
CODEOOD_API void codeood_fnrd_free(codeood_fnrd* ranges);

// ---------------------------------------------------------------------------
// Scorers: larger score = more in-distribution.
//
// Names: code, code_top1, msp, maxlogit, energy, fnrd, constant. The code
// scorers need `bank` and `stats`, fnrd needs `fnrd`; unused resources may
// be NULL. Resources must outlive the scorer.

CODEOOD_API codeood_status codeood_scorer_create(const char* name,
                                                 const codeood_detectors* bank,
                                                 const codeood_calibration* stats,
                                                 const codeood_fnrd* fnrd,
                                                 codeood_scorer** out);
// Comma-separated list of every scorer name.
CODEOOD_API const char* codeood_scorer_names(void);
// scores[s * count + n] = scorers[s] on image n; `capacity` >= n_scorers * count.
CODEOOD_API codeood_status codeood_score_dataset(const codeood_classifier* model,
                                                 const codeood_scorer* const* scorers,
                                                 size_t n_scorers, const codeood_dataset* dataset,
                                                 double* scores, size_t capacity);
CODEOOD_API void codeood_scorer_free(codeood_scorer* scorer);

// ---------------------------------------------------------------------------
// Metrics (ID samples are the positive class)

typedef struct codeood_ood_metrics {
  double auroc;
  double aupr;
  double fpr95;
} codeood_ood_metrics;

CODEOOD_API codeood_status codeood_ood_metrics_compute(const double* id_scores, size_t n_id,
                                                       const double* ood_scores, size_t n_ood,
                                                       codeood_ood_metrics* out);
CODEOOD_API codeood_status codeood_spearman(const double* xs, const double* ys, size_t n,
                                            double* value, int* degenerate);

// ---------------------------------------------------------------------------
// Perturbations

// Kinds: blur, noise, brightness, rotation_forth, rotation_back. Writes up to
// `capacity` magnitudes and the grid length to `count`.
CODEOOD_API codeood_status codeood_perturbation_default_grid(const char* kind, double* alphas,
                                                             size_t capacity, size_t* count);
// +1 when intensity grows with alpha, -1 for brightness and rotation_back
// (identity at the top of the range).
CODEOOD_API codeood_status codeood_perturbation_intensity_direction(const char* kind,
                                                                    int* direction);
// confidences[s * n_alphas + a] = expected confidence of scorer s at
// alphas[a]; srcc[s] = spearman(alphas, confidences of s) and degenerate[s]
// per scorer. Any of srcc / degenerate may be NULL.
CODEOOD_API codeood_status codeood_perturbation_sweep(
    const codeood_classifier* model, const codeood_scorer* const* scorers, size_t n_scorers,
    const codeood_dataset* dataset, const char* kind, const double* alphas, size_t n_alphas,
    uint64_t seed, double* confidences, double* srcc, int* degenerate);

// ---------------------------------------------------------------------------
// Explanations

CODEOOD_API codeood_status codeood_prototypes_extract(const codeood_detectors* bank,
                                                      const codeood_calibration* stats,
                                                      const codeood_features* train,
                                                      codeood_prototypes** out);
CODEOOD_API void codeood_prototypes_free(codeood_prototypes* prototypes);
// JSON explanation of image `index` of `dataset`.
CODEOOD_API codeood_status codeood_explain(const codeood_detectors* bank,
                                           const codeood_calibration* stats,
                                           const codeood_classifier* model,
                                           const codeood_prototypes* prototypes,
                                           const codeood_dataset* dataset, size_t index,
                                           double threshold, char** json);
// Receptive-field crops as PGM files: <prefix>_detector<i>.pgm for every
// present detector of the explained image and <prefix>_prototype<i>.pgm for
// the predicted class's prototypes (`train` must be the dataset the
// prototypes were extracted from). `written` receives the file count.
CODEOOD_API codeood_status codeood_explain_dump_patches(
    const codeood_detectors* bank, const codeood_calibration* stats,
    const codeood_classifier* model, const codeood_prototypes* prototypes,
    const codeood_dataset* train, const codeood_dataset* dataset, size_t index, double threshold,
    const char* prefix, size_t* written);

// ---------------------------------------------------------------------------
// Open-set recognition

typedef struct codeood_osr_config {
  uint32_t closed_classes;
  uint32_t splits;
  uint64_t seed;
  codeood_classifier_config classifier;
  codeood_detector_config detector;
  const char* scorers;  // comma-separated; NULL = "code"
} codeood_osr_config;

CODEOOD_API void codeood_osr_config_default(codeood_osr_config* config);
// closed[s * closed_classes + j]: sorted closed classes of split s.
CODEOOD_API codeood_status codeood_osr_splits(uint32_t num_classes, uint32_t closed_classes,
                                              uint32_t splits, uint64_t seed, uint32_t* closed,
                                              size_t capacity);
// JSON result: scorers, per-split closed/open classes, accuracy and AUROC per
// scorer, mean AUROC per scorer.
CODEOOD_API codeood_status codeood_osr_evaluate(const codeood_dataset* train,
                                                const codeood_dataset* test,
                                                const codeood_osr_config* config, char** json);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // CODEOOD_CODEOOD_H_
