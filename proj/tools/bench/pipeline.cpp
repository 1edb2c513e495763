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

#include "bench/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "codeood/codeood.h"
#include "json.hpp"

namespace codeood::bench {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Free {
  void operator()(codeood_dataset* p) const { codeood_dataset_free(p); }
  void operator()(codeood_classifier* p) const { codeood_classifier_free(p); }
  void operator()(codeood_features* p) const { codeood_features_free(p); }
  void operator()(codeood_detectors* p) const { codeood_detectors_free(p); }
  void operator()(codeood_calibration* p) const { codeood_calibration_free(p); }
  void operator()(codeood_fnrd* p) const { codeood_fnrd_free(p); }
  void operator()(codeood_scorer* p) const { codeood_scorer_free(p); }
  void operator()(codeood_prototypes* p) const { codeood_prototypes_free(p); }
};
template <typename T>
using Owned = std::unique_ptr<T, Free>;

void Check(codeood_status status, const std::string& what) {
  if (status != CODEOOD_OK) {
    throw StageError(what + ": " + codeood_status_name(status) + ": " + codeood_last_error());
  }
}

// Independent seed per pipeline component.
enum SeedStream : std::uint64_t {
  kDataSeed = 1,
  kClassifierSeed,
  kDetectorSeed,
  kNoiseSourceSeed,
  kPerturbationSeed,
  kOsrSeed,
};

std::uint64_t StreamSeed(const Config& config, SeedStream stream) {
  std::uint64_t z = config.GetUint("seed") + 0x9e3779b97f4a7c15ULL * stream;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string Artifact(const fs::path& out, const std::string& name) { return (out / name).string(); }

std::string RequireArtifact(const fs::path& out, const std::string& name,
                            const char* producer) {
  const fs::path p = out / name;
  if (!fs::exists(p)) {
    throw StageError("missing artifact " + p.string() + " (run '" + producer + "' first)");
  }
  return p.string();
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw StageError("cannot write " + path.string());
}

Json ReadJson(const fs::path& out, const std::string& name, const char* producer) {
  std::ifstream in(RequireArtifact(out, name, producer));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StageError("cannot parse " + (out / name).string() + ": " + e.what());
  }
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Data

struct Data {
  Owned<codeood_dataset> id_train;
  Owned<codeood_dataset> id_test;
  Owned<codeood_dataset> heldout;  // test images of classes outside the ID set; may be null
};

size_t DatasetSize(const codeood_dataset* d) {
  size_t n = 0;
  Check(codeood_dataset_info(d, &n, nullptr, nullptr, nullptr, nullptr), "dataset info");
  return n;
}

uint32_t DatasetClasses(const codeood_dataset* d) {
  uint32_t n = 0;
  Check(codeood_dataset_info(d, nullptr, &n, nullptr, nullptr, nullptr), "dataset info");
  return n;
}

Owned<codeood_dataset> Select(const codeood_dataset* d, const std::vector<uint32_t>& classes,
                              bool relabel) {
  codeood_dataset* out = nullptr;
  Check(codeood_dataset_select(d, classes.data(), classes.size(), relabel ? 1 : 0, &out),
        "select classes");
  return Owned<codeood_dataset>(out);
}

std::vector<uint32_t> Range(uint32_t lo, uint32_t hi) {
  std::vector<uint32_t> v;
  for (uint32_t c = lo; c < hi; ++c) v.push_back(c);
  return v;
}

void SyntheticPair(const Config& config, uint32_t classes, uint32_t train_per_class,
                   uint32_t test_per_class, Owned<codeood_dataset>* train,
                   Owned<codeood_dataset>* test) {
  codeood_synthetic_params p;
  codeood_synthetic_params_default(&p);
  p.classes = classes;
  p.size = static_cast<uint32_t>(config.GetUint("synthetic.size"));
  p.train_per_class = train_per_class;
  p.test_per_class = test_per_class;
  p.background_noise = config.GetDouble("synthetic.background_noise");
  p.seed = StreamSeed(config, kDataSeed);
  codeood_dataset* tr = nullptr;
  codeood_dataset* te = nullptr;
  Check(codeood_dataset_synthetic(&p, &tr, &te), "synthetic dataset");
  train->reset(tr);
  test->reset(te);
}

void LoadIdxPair(const Config& config, Owned<codeood_dataset>* train,
                 Owned<codeood_dataset>* test) {
  for (const char* key : {"idx.train_images", "idx.train_labels", "idx.test_images",
                          "idx.test_labels"}) {
    if (config.GetString(key).empty()) throw StageError(std::string("config key ") + key +
                                                        " is required for dataset = idx");
  }
  codeood_dataset* tr = nullptr;
  codeood_dataset* te = nullptr;
  Check(codeood_dataset_load_idx(config.GetString("idx.train_images").c_str(),
                                 config.GetString("idx.train_labels").c_str(), &tr),
        "load IDX training set");
  train->reset(tr);
  Check(codeood_dataset_load_idx(config.GetString("idx.test_images").c_str(),
                                 config.GetString("idx.test_labels").c_str(), &te),
        "load IDX test set");
  test->reset(te);
}

Data LoadData(const Config& config) {
  Data data;
  Owned<codeood_dataset> train;
  Owned<codeood_dataset> test;
  std::vector<uint32_t> id_classes;
  std::vector<uint32_t> ood_classes;
  const std::string& kind = config.GetString("dataset");
  if (kind == "synthetic") {
    const auto id = static_cast<uint32_t>(config.GetUint("synthetic.classes"));
    const auto ood = static_cast<uint32_t>(config.GetUint("synthetic.ood_classes"));
    SyntheticPair(config, id + ood, static_cast<uint32_t>(config.GetUint("synthetic.train_per_class")),
                  static_cast<uint32_t>(config.GetUint("synthetic.test_per_class")), &train,
                  &test);
    id_classes = Range(0, id);
    ood_classes = Range(id, id + ood);
  } else if (kind == "idx") {
    LoadIdxPair(config, &train, &test);
    const uint32_t total = std::max(DatasetClasses(train.get()), DatasetClasses(test.get()));
    for (const std::string& item : config.GetList("idx.id_classes")) {
      id_classes.push_back(static_cast<uint32_t>(std::stoul(item)));
    }
    if (id_classes.empty()) id_classes = Range(0, total);
    for (uint32_t c = 0; c < total; ++c) {
      if (std::find(id_classes.begin(), id_classes.end(), c) == id_classes.end()) {
        ood_classes.push_back(c);
      }
    }
  } else {
    throw StageError("config key dataset: expected 'synthetic' or 'idx', got '" + kind + "'");
  }
  data.id_train = Select(train.get(), id_classes, true);
  data.id_test = Select(test.get(), id_classes, true);
  if (!ood_classes.empty()) data.heldout = Select(test.get(), ood_classes, false);
  return data;
}

// ---------------------------------------------------------------------------
// Configs

codeood_classifier_config ClassifierConfig(const Config& config) {
  codeood_classifier_config c;
  codeood_classifier_config_default(&c);
  c.conv1_channels = config.GetUint("classifier.conv1_channels");
  c.feature_channels = config.GetUint("classifier.feature_channels");
  c.hidden_units = config.GetUint("classifier.hidden_units");
  c.epochs = config.GetUint("classifier.epochs");
  c.batch_size = config.GetUint("classifier.batch_size");
  c.learning_rate = config.GetDouble("classifier.learning_rate");
  c.momentum = config.GetDouble("classifier.momentum");
  c.seed = StreamSeed(config, kClassifierSeed);
  return c;
}

codeood_detector_config DetectorConfig(const Config& config) {
  codeood_detector_config c;
  codeood_detector_config_default(&c);
  c.per_class = config.GetUint("detector.per_class");
  c.lambda_u = config.GetDouble("detector.lambda_u");
  c.threshold = config.GetDouble("detector.threshold");
  c.learning_rate = config.GetDouble("detector.learning_rate");
  c.weight_decay = config.GetDouble("detector.weight_decay");
  c.epochs = config.GetUint("detector.epochs");
  c.batch_size = config.GetUint("detector.batch_size");
  c.rho = config.GetDouble("detector.rho");
  c.epsilon = config.GetDouble("detector.epsilon");
  c.seed = StreamSeed(config, kDetectorSeed);
  return c;
}

// ---------------------------------------------------------------------------
// Loaded artifacts

struct Models {
  Owned<codeood_classifier> classifier;
  Owned<codeood_detectors> bank;
  Owned<codeood_calibration> stats;
  Owned<codeood_fnrd> fnrd;
};

Owned<codeood_classifier> LoadClassifier(const fs::path& out) {
  codeood_classifier* m = nullptr;
  Check(codeood_classifier_load(RequireArtifact(out, "classifier.bin", "train-classifier").c_str(),
                                &m),
        "load classifier");
  return Owned<codeood_classifier>(m);
}

Owned<codeood_features> LoadFeatures(const fs::path& out, const std::string& name) {
  codeood_features* f = nullptr;
  Check(codeood_features_load(RequireArtifact(out, name, "extract-features").c_str(), &f),
        "load features");
  return Owned<codeood_features>(f);
}

Owned<codeood_detectors> LoadDetectors(const fs::path& out) {
  codeood_detectors* b = nullptr;
  Check(codeood_detectors_load(RequireArtifact(out, "detectors.bin", "train-detectors").c_str(),
                               &b),
        "load detectors");
  return Owned<codeood_detectors>(b);
}

Models LoadModels(const fs::path& out) {
  Models m;
  m.classifier = LoadClassifier(out);
  m.bank = LoadDetectors(out);
  codeood_calibration* stats = nullptr;
  Check(codeood_calibration_load(RequireArtifact(out, "calibration.bin", "calibrate").c_str(),
                                 &stats),
        "load calibration");
  m.stats.reset(stats);
  codeood_fnrd* fnrd = nullptr;
  Check(codeood_fnrd_load(RequireArtifact(out, "fnrd.bin", "calibrate").c_str(), &fnrd),
        "load FNRD ranges");
  m.fnrd.reset(fnrd);
  return m;
}

struct ScorerSet {
  std::vector<std::string> names;
  std::vector<Owned<codeood_scorer>> owned;
  std::vector<const codeood_scorer*> raw;
};

ScorerSet MakeScorers(const Models& m, const std::vector<std::string>& names) {
  if (names.empty()) throw StageError("scorer list is empty");
  ScorerSet set;
  set.names = names;
  for (const std::string& name : names) {
    codeood_scorer* s = nullptr;
    Check(codeood_scorer_create(name.c_str(), m.bank.get(), m.stats.get(), m.fnrd.get(), &s),
          "create scorer '" + name + "'");
    set.owned.emplace_back(s);
    set.raw.push_back(s);
  }
  return set;
}

// scores[s][n]
std::vector<std::vector<double>> Score(const Models& m, const ScorerSet& scorers,
                                       const codeood_dataset* d) {
  const size_t n = DatasetSize(d);
  std::vector<double> flat(scorers.raw.size() * n);
  Check(codeood_score_dataset(m.classifier.get(), scorers.raw.data(), scorers.raw.size(), d,
                              flat.data(), flat.size()),
        "score dataset");
  std::vector<std::vector<double>> out;
  for (size_t s = 0; s < scorers.raw.size(); ++s) {
    out.emplace_back(flat.begin() + s * n, flat.begin() + (s + 1) * n);
  }
  return out;
}

void AppendUnique(std::vector<std::string>* list, const std::string& name) {
  if (std::find(list->begin(), list->end(), name) == list->end()) list->push_back(name);
}

const std::string& CodeMode(const Config& config) {
  const std::string& mode = config.GetString("code.mode");
  if (mode != "weighted" && mode != "top1") {
    throw StageError("config key code.mode: expected 'weighted' or 'top1', got '" + mode + "'");
  }
  return mode;
}

}  // namespace

std::vector<std::string> OodScorers(const Config& config) {
  std::vector<std::string> names = {"code", "code_top1"};
  for (const std::string& s : config.GetList("scorers")) AppendUnique(&names, s);
  return names;
}

std::vector<std::string> SweepScorers(const Config& config) {
  const bool top1 = CodeMode(config) == "top1";
  std::vector<std::string> names;
  for (const std::string& s : config.GetList("scorers")) {
    AppendUnique(&names, (s == "code" && top1) ? "code_top1" : s);
  }
  if (names.empty()) throw StageError("config key scorers is empty");
  return names;
}

// ---------------------------------------------------------------------------
// Stages

void TrainClassifierStage(const Config& config, const fs::path& out) {
  fs::create_directories(out);
  const Data data = LoadData(config);
  const codeood_classifier_config cfg = ClassifierConfig(config);
  codeood_classifier* raw = nullptr;
  double final_loss = 0.0;
  Check(codeood_classifier_train(data.id_train.get(), &cfg, &raw, &final_loss),
        "train classifier");
  Owned<codeood_classifier> model(raw);
  Check(codeood_classifier_save(model.get(), Artifact(out, "classifier.bin").c_str()),
        "save classifier");
  double train_acc = 0.0;
  double test_acc = 0.0;
  uint64_t checksum = 0;
  Check(codeood_classifier_accuracy(model.get(), data.id_train.get(), &train_acc), "accuracy");
  Check(codeood_classifier_accuracy(model.get(), data.id_test.get(), &test_acc), "accuracy");
  Check(codeood_classifier_checksum(model.get(), &checksum), "checksum");
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum));
  Json j;
  j["num_classes"] = DatasetClasses(data.id_train.get());
  j["train_images"] = DatasetSize(data.id_train.get());
  j["test_images"] = DatasetSize(data.id_test.get());
  j["final_loss"] = final_loss;
  j["train_accuracy"] = train_acc;
  j["test_accuracy"] = test_acc;
  j["checksum"] = hex;
  WriteText(out / "classifier.json", j.dump(2) + "\n");
}

void ExtractFeaturesStage(const Config& config, const fs::path& out) {
  const Data data = LoadData(config);
  const Owned<codeood_classifier> model = LoadClassifier(out);
  for (const auto& [name, dataset] :
       {std::pair{"features_train.bin", data.id_train.get()},
        std::pair{"features_test.bin", data.id_test.get()}}) {
    codeood_features* f = nullptr;
    Check(codeood_features_extract(model.get(), dataset, &f), "extract features");
    Owned<codeood_features> features(f);
    Check(codeood_features_save(features.get(), Artifact(out, name).c_str()), "save features");
  }
}

void TrainDetectorsStage(const Config& config, const fs::path& out) {
  const Owned<codeood_features> train = LoadFeatures(out, "features_train.bin");
  const codeood_detector_config cfg = DetectorConfig(config);
  codeood_detectors* raw = nullptr;
  Check(codeood_detectors_train(train.get(), &cfg, &raw), "train detectors");
  Owned<codeood_detectors> bank(raw);
  Check(codeood_detectors_save(bank.get(), Artifact(out, "detectors.bin").c_str()),
        "save detectors");
  double locality = 0.0, unicity = 0.0, total = 0.0;
  Check(codeood_detectors_loss(bank.get(), train.get(), &locality, &unicity, &total),
        "detector loss");
  size_t count = 0;
  Check(codeood_features_info(train.get(), &count, nullptr, nullptr, nullptr, nullptr),
        "features info");
  Json j;
  j["per_class"] = cfg.per_class;
  j["lambda_u"] = cfg.lambda_u;
  j["threshold"] = cfg.threshold;
  j["train_samples"] = count;
  j["locality_loss"] = locality;
  j["unicity_loss"] = unicity;
  j["total_loss"] = total;
  WriteText(out / "detectors.json", j.dump(2) + "\n");
}

void CalibrateStage(const Config& config, const fs::path& out) {
  const Owned<codeood_features> train = LoadFeatures(out, "features_train.bin");
  const Owned<codeood_detectors> bank = LoadDetectors(out);
  codeood_calibration* stats = nullptr;
  Check(codeood_calibrate(bank.get(), train.get(), config.GetDouble("calibration.sigma_floor"),
                          &stats),
        "calibrate");
  Owned<codeood_calibration> owned_stats(stats);
  Check(codeood_calibration_save(stats, Artifact(out, "calibration.bin").c_str()),
        "save calibration");

  const Data data = LoadData(config);
  const Owned<codeood_classifier> model = LoadClassifier(out);
  codeood_fnrd* fnrd = nullptr;
  Check(codeood_fnrd_calibrate(model.get(), data.id_train.get(), &fnrd), "FNRD calibration");
  Owned<codeood_fnrd> owned_fnrd(fnrd);
  Check(codeood_fnrd_save(fnrd, Artifact(out, "fnrd.bin").c_str()), "save FNRD ranges");
}

void EvalOodStage(const Config& config, const fs::path& out) {
  const Data data = LoadData(config);
  const Models models = LoadModels(out);
  const ScorerSet scorers = MakeScorers(models, OodScorers(config));
  const auto id_scores = Score(models, scorers, data.id_test.get());

  Json j;
  j["id_images"] = DatasetSize(data.id_test.get());
  j["scorers"] = scorers.names;
  j["sources"] = Json::array();
  std::string csv = "source,scorer,auroc,aupr,fpr95\n";
  for (const std::string& source : config.GetList("ood.sources")) {
    Owned<codeood_dataset> ood;
    if (source == "heldout") {
      if (!data.heldout) throw StageError("OoD source 'heldout' needs classes outside the ID set");
      codeood_dataset* copy = nullptr;
      Check(codeood_dataset_subsample(data.heldout.get(), DatasetSize(data.heldout.get()), &copy),
            "copy held-out set");
      ood.reset(copy);
    } else if (source == "noise") {
      size_t channels = 0, height = 0, width = 0;
      Check(codeood_dataset_info(data.id_test.get(), nullptr, nullptr, &channels, &height,
                                 &width),
            "dataset info");
      codeood_dataset* noise = nullptr;
      Check(codeood_dataset_uniform_noise(config.GetUint("ood.noise_count"), channels, height,
                                          width, StreamSeed(config, kNoiseSourceSeed), &noise),
            "uniform noise set");
      ood.reset(noise);
    } else {
      throw StageError("unknown OoD source '" + source + "' (expected heldout or noise)");
    }
    const auto ood_scores = Score(models, scorers, ood.get());
    Json src;
    src["name"] = source;
    src["images"] = DatasetSize(ood.get());
    src["metrics"] = Json::object();
    for (size_t s = 0; s < scorers.names.size(); ++s) {
      codeood_ood_metrics m;
      Check(codeood_ood_metrics_compute(id_scores[s].data(), id_scores[s].size(),
                                        ood_scores[s].data(), ood_scores[s].size(), &m),
            "OoD metrics");
      src["metrics"][scorers.names[s]] = {{"auroc", m.auroc}, {"aupr", m.aupr},
                                          {"fpr95", m.fpr95}};
      csv += source + "," + scorers.names[s] + "," + Num(m.auroc) + "," + Num(m.aupr) + "," +
             Num(m.fpr95) + "\n";
    }
    j["sources"].push_back(src);
  }
  WriteText(out / "ood.json", j.dump(2) + "\n");
  WriteText(out / "ood.csv", csv);
}

void EvalPerturbationStage(const Config& config, const fs::path& out) {
  const Data data = LoadData(config);
  const Models models = LoadModels(out);
  const ScorerSet scorers = MakeScorers(models, SweepScorers(config));
  codeood_dataset* raw = nullptr;
  Check(codeood_dataset_subsample(data.id_test.get(), config.GetUint("perturbation.images"), &raw),
        "subsample test set");
  const Owned<codeood_dataset> images(raw);
  const bool curves = config.GetBool("perturbation.curves");

  Json j;
  j["images"] = DatasetSize(images.get());
  j["scorers"] = scorers.names;
  j["sweeps"] = Json::array();
  std::string csv = "kind,scorer,alpha,expected_confidence\n";
  std::string srcc_csv;
  for (const std::string& kind : config.GetList("perturbation.kinds")) {
    std::vector<double> alphas;
    std::string grid_key = "perturbation.grid." + kind;
    if (config.values().count(grid_key) == 0) {
      throw StageError("unknown perturbation kind '" + kind + "'");
    }
    alphas = config.GetDoubleList(grid_key);
    if (alphas.empty()) {
      size_t count = 0;
      Check(codeood_perturbation_default_grid(kind.c_str(), nullptr, 0, &count), "grid");
      alphas.resize(count);
      Check(codeood_perturbation_default_grid(kind.c_str(), alphas.data(), count, &count),
            "grid");
    }
    const size_t ns = scorers.raw.size();
    std::vector<double> conf(ns * alphas.size());
    std::vector<double> srcc(ns);
    std::vector<int> degenerate(ns);
    Check(codeood_perturbation_sweep(models.classifier.get(), scorers.raw.data(), ns,
                                     images.get(), kind.c_str(), alphas.data(), alphas.size(),
                                     StreamSeed(config, kPerturbationSeed), conf.data(),
                                     srcc.data(), degenerate.data()),
          "perturbation sweep '" + kind + "'");
    int direction = 1;
    Check(codeood_perturbation_intensity_direction(kind.c_str(), &direction), "direction");
    Json sweep;
    sweep["kind"] = kind;
    sweep["intensity_direction"] = direction;
    sweep["alphas"] = alphas;
    sweep["results"] = Json::array();
    for (size_t s = 0; s < ns; ++s) {
      const std::vector<double> e(conf.begin() + s * alphas.size(),
                                  conf.begin() + (s + 1) * alphas.size());
      sweep["results"].push_back({{"scorer", scorers.names[s]},
                                  {"expected_confidence", e},
                                  {"srcc", srcc[s]},
                                  {"intensity_srcc", srcc[s] == 0.0 ? 0.0 : direction * srcc[s]},
                                  {"degenerate", degenerate[s] != 0}});
      for (size_t a = 0; a < alphas.size(); ++a) {
        csv += kind + "," + scorers.names[s] + "," + Num(alphas[a]) + "," + Num(e[a]) + "\n";
      }
      srcc_csv += kind + "," + scorers.names[s] + ",srcc," + Num(srcc[s]) + "\n";
      srcc_csv += kind + "," + scorers.names[s] + ",intensity_srcc," +
                  Num(srcc[s] == 0.0 ? 0.0 : direction * srcc[s]) + "\n";
    }
    j["sweeps"].push_back(sweep);
    if (curves) {
      std::string dat = "# alpha";
      for (const std::string& name : scorers.names) dat += " " + name;
      dat += "\n";
      for (size_t a = 0; a < alphas.size(); ++a) {
        dat += Num(alphas[a]);
        for (size_t s = 0; s < ns; ++s) dat += " " + Num(conf[s * alphas.size() + a]);
        dat += "\n";
      }
      WriteText(out / ("perturbation_" + kind + ".dat"), dat);
    }
  }
  WriteText(out / "perturbation.json", j.dump(2) + "\n");
  WriteText(out / "perturbation.csv", csv + srcc_csv);
}

void EvalOsrStage(const Config& config, const fs::path& out) {
  fs::create_directories(out);
  Owned<codeood_dataset> train;
  Owned<codeood_dataset> test;
  if (config.GetString("dataset") == "synthetic") {
    SyntheticPair(config, static_cast<uint32_t>(config.GetUint("osr.classes")),
                  static_cast<uint32_t>(config.GetUint("osr.train_per_class")),
                  static_cast<uint32_t>(config.GetUint("osr.test_per_class")), &train, &test);
  } else {
    LoadIdxPair(config, &train, &test);
  }
  codeood_osr_config cfg;
  codeood_osr_config_default(&cfg);
  cfg.closed_classes = static_cast<uint32_t>(config.GetUint("osr.closed"));
  cfg.splits = static_cast<uint32_t>(config.GetUint("osr.splits"));
  cfg.seed = StreamSeed(config, kOsrSeed);
  cfg.classifier = ClassifierConfig(config);
  cfg.detector = DetectorConfig(config);
  std::string names;
  for (const std::string& s : SweepScorers(config)) names += (names.empty() ? "" : ",") + s;
  cfg.scorers = names.c_str();
  char* raw = nullptr;
  Check(codeood_osr_evaluate(train.get(), test.get(), &cfg, &raw), "open-set evaluation");
  const std::string text(raw);
  codeood_string_free(raw);
  Json result = Json::parse(text);

  Json j;
  j["classes"] = std::max(DatasetClasses(train.get()), DatasetClasses(test.get()));
  j["closed_classes"] = cfg.closed_classes;
  j["splits"] = result["splits"];
  j["scorers"] = result["scorers"];
  j["mean_auroc"] = result["mean_auroc"];
  std::string csv = "split,scorer,auroc\n";
  const auto& scorer_names = result["scorers"];
  for (size_t s = 0; s < result["splits"].size(); ++s) {
    for (size_t k = 0; k < scorer_names.size(); ++k) {
      csv += std::to_string(s) + "," + scorer_names[k].get<std::string>() + "," +
             Num(result["splits"][s]["auroc"][k].get<double>()) + "\n";
    }
  }
  for (size_t k = 0; k < scorer_names.size(); ++k) {
    csv += "mean," + scorer_names[k].get<std::string>() + "," +
           Num(result["mean_auroc"][k].get<double>()) + "\n";
  }
  WriteText(out / "osr.json", j.dump(2) + "\n");
  WriteText(out / "osr.csv", csv);
}

void ExplainStage(const Config& config, const fs::path& out) {
  const Data data = LoadData(config);
  const Models models = LoadModels(out);
  const Owned<codeood_features> train = LoadFeatures(out, "features_train.bin");
  codeood_prototypes* raw = nullptr;
  Check(codeood_prototypes_extract(models.bank.get(), models.stats.get(), train.get(), &raw),
        "extract prototypes");
  const Owned<codeood_prototypes> prototypes(raw);
  const size_t index = config.GetUint("explain.index");
  const double threshold = config.GetDouble("explain.threshold");
  char* json = nullptr;
  Check(codeood_explain(models.bank.get(), models.stats.get(), models.classifier.get(),
                        prototypes.get(), data.id_test.get(), index, threshold, &json),
        "explain");
  Json j = Json::parse(json);
  codeood_string_free(json);
  Json wrapped;
  wrapped["image_index"] = index;
  wrapped["explanation"] = j;
  if (config.GetBool("explain.patches")) {
    fs::create_directories(out / "explain");
    size_t written = 0;
    Check(codeood_explain_dump_patches(models.bank.get(), models.stats.get(),
                                       models.classifier.get(), prototypes.get(),
                                       data.id_train.get(), data.id_test.get(), index, threshold,
                                       Artifact(out / "explain", "image" + std::to_string(index))
                                           .c_str(),
                                       &written),
          "dump patches");
    Check(codeood_dataset_write_pgm(
              data.id_test.get(), index,
              Artifact(out / "explain", "image" + std::to_string(index) + ".pgm").c_str()),
          "write image");
    wrapped["patch_files"] = written;
  }
  WriteText(out / "explain.json", wrapped.dump(2) + "\n");
}

void ReportStage(const Config& config, const fs::path& out) {
  Json report;
  Json meta;
  meta["tool"] = "codeood";
  meta["version"] = codeood_version();
  meta["seed"] = config.GetUint("seed");
  meta["config_hash"] = config.Hash();
  Json cfg = Json::object();
  for (const auto& [key, value] : config.values()) {
    if (key != "out") cfg[key] = value;
  }
  meta["config"] = cfg;
  report["metadata"] = meta;
  report["classifier"] = ReadJson(out, "classifier.json", "train-classifier");
  report["detectors"] = ReadJson(out, "detectors.json", "train-detectors");
  const Json ood = ReadJson(out, "ood.json", "eval-ood");
  const Json pert = ReadJson(out, "perturbation.json", "eval-perturbation");
  report["ood"] = ood;
  report["perturbation"] = pert;
  const bool osr_enabled = config.GetBool("osr.enabled");
  Json osr;
  if (osr_enabled) osr = ReadJson(out, "osr.json", "eval-osr");
  report["osr"] = osr_enabled ? osr : Json(nullptr);

  std::string csv = "section,subject,scorer,metric,value\n";
  const Json& cls = report["classifier"];
  csv += "classifier,test,-,accuracy," + Num(cls["test_accuracy"].get<double>()) + "\n";
  for (const Json& src : ood["sources"]) {
    for (const auto& [scorer, m] : src["metrics"].items()) {
      for (const char* metric : {"auroc", "aupr", "fpr95"}) {
        csv += "ood," + src["name"].get<std::string>() + "," + scorer + "," + metric + "," +
               Num(m[metric].get<double>()) + "\n";
      }
    }
  }
  for (const Json& sweep : pert["sweeps"]) {
    for (const Json& r : sweep["results"]) {
      for (const char* metric : {"srcc", "intensity_srcc"}) {
        csv += "perturbation," + sweep["kind"].get<std::string>() + "," +
               r["scorer"].get<std::string>() + "," + metric + "," +
               Num(r[metric].get<double>()) + "\n";
      }
    }
  }
  if (osr_enabled) {
    const Json& names = osr["scorers"];
    for (size_t s = 0; s < osr["splits"].size(); ++s) {
      for (size_t k = 0; k < names.size(); ++k) {
        csv += "osr,split" + std::to_string(s) + "," + names[k].get<std::string>() + ",auroc," +
               Num(osr["splits"][s]["auroc"][k].get<double>()) + "\n";
      }
    }
    for (size_t k = 0; k < names.size(); ++k) {
      csv += "osr,mean," + names[k].get<std::string>() + ",auroc," +
             Num(osr["mean_auroc"][k].get<double>()) + "\n";
    }
  }
  WriteText(out / "report.json", report.dump(2) + "\n");
  WriteText(out / "report.csv", csv);
}

const std::vector<Stage>& Stages() {
  static const std::vector<Stage> stages = {
      {"train-classifier", "Train the CNN on the ID training set", TrainClassifierStage},
      {"extract-features", "Store feature-cut maps of the ID train/test sets",
       ExtractFeaturesStage},
      {"train-detectors", "Train per-class pattern detectors", TrainDetectorsStage},
      {"calibrate", "Compute detector statistics and FNRD ranges", CalibrateStage},
      {"eval-ood", "Score ID test vs OoD sources (AUROC/AUPR/FPR95)", EvalOodStage},
      {"eval-perturbation", "Expected confidence and SRCC along perturbation grids",
       EvalPerturbationStage},
      {"eval-osr", "Open-set protocol over seeded closed/open splits", EvalOsrStage},
      {"explain", "Explain one ID test image", ExplainStage},
      {"report", "Merge stage outputs into report.json / report.csv", ReportStage},
  };
  return stages;
}

void RunPipeline(const Config& config, const fs::path& out) {
  for (const Stage& stage : Stages()) {
    if (std::string(stage.name) == "eval-osr" && !config.GetBool("osr.enabled")) continue;
    stage.run(config, out);
  }
}

}  // namespace codeood::bench
