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

#include "codeood/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "binary_io.hpp"
#include "codeood/error.hpp"
#include "codeood/parallel.hpp"
#include "codeood/rng.hpp"

namespace codeood {

namespace {

constexpr char kModelMagic[] = "CODECL01";

enum ParamIndex : std::size_t { kConv1W = 0, kConv1B, kConv2W, kConv2B };

// Pre-activation of a 3x3 same-padded convolution over an [h][w][c] block.
// Weights are laid out [out][kh][kw][in].
void Conv3x3(std::span<const double> in, std::size_t rows, std::size_t cols,
             std::size_t cin, const Tensor& weight, const Tensor& bias, std::size_t cout,
             std::vector<double>& out) {
  out.assign(rows * cols * cout, 0.0);
  const double* wdata = weight.data().data();
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t w = 0; w < cols; ++w) {
      double* dst = &out[(h * cols + w) * cout];
      for (std::size_t o = 0; o < cout; ++o) dst[o] = bias[o];
      for (std::size_t kh = 0; kh < 3; ++kh) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(h + kh) - 1;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(rows)) continue;
        for (std::size_t kw = 0; kw < 3; ++kw) {
          const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(w + kw) - 1;
          if (x < 0 || x >= static_cast<std::ptrdiff_t>(cols)) continue;
          const double* src = &in[(static_cast<std::size_t>(y) * cols + static_cast<std::size_t>(x)) * cin];
          for (std::size_t o = 0; o < cout; ++o) {
            const double* wp = wdata + ((o * 3 + kh) * 3 + kw) * cin;
            double sum = 0.0;
            for (std::size_t i = 0; i < cin; ++i) sum += wp[i] * src[i];
            dst[o] += sum;
          }
        }
      }
    }
  }
}

// Accumulates parameter gradients and (optionally) the input gradient.
void Conv3x3Backward(std::span<const double> in, std::size_t rows, std::size_t cols,
                     std::size_t cin, const Tensor& weight, std::size_t cout,
                     std::span<const double> dout, Tensor& dweight, Tensor& dbias,
                     std::vector<double>* din) {
  if (din) din->assign(rows * cols * cin, 0.0);
  const double* wdata = weight.data().data();
  double* dw = dweight.data().data();
  for (std::size_t h = 0; h < rows; ++h) {
    for (std::size_t w = 0; w < cols; ++w) {
      const double* g = &dout[(h * cols + w) * cout];
      for (std::size_t o = 0; o < cout; ++o) dbias[o] += g[o];
      for (std::size_t kh = 0; kh < 3; ++kh) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(h + kh) - 1;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(rows)) continue;
        for (std::size_t kw = 0; kw < 3; ++kw) {
          const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(w + kw) - 1;
          if (x < 0 || x >= static_cast<std::ptrdiff_t>(cols)) continue;
          const std::size_t src_off =
              (static_cast<std::size_t>(y) * cols + static_cast<std::size_t>(x)) * cin;
          const double* src = &in[src_off];
          for (std::size_t o = 0; o < cout; ++o) {
            const double go = g[o];
            if (go == 0.0) continue;
            const std::size_t woff = ((o * 3 + kh) * 3 + kw) * cin;
            for (std::size_t i = 0; i < cin; ++i) dw[woff + i] += go * src[i];
            if (din) {
              double* di = din->data() + src_off;
              for (std::size_t i = 0; i < cin; ++i) di[i] += go * wdata[woff + i];
            }
          }
        }
      }
    }
  }
}

// Maximum of every channel over the whole map.
void GlobalMaxPool(std::span<const double> in, std::size_t cells, std::size_t ch,
                   std::vector<double>& out, std::vector<std::uint32_t>& arg) {
  out.assign(ch, 0.0);
  arg.assign(ch, 0);
  for (std::size_t c = 0; c < ch; ++c) {
    std::size_t best = c;
    for (std::size_t i = 1; i < cells; ++i) {
      if (in[i * ch + c] > in[best]) best = i * ch + c;
    }
    out[c] = in[best];
    arg[c] = static_cast<std::uint32_t>(best);
  }
}

void MaxPool2x2(std::span<const double> in, std::size_t rows, std::size_t cols, std::size_t ch,
                std::vector<double>& out, std::vector<std::uint32_t>& arg) {
  const std::size_t orow = rows / 2;
  const std::size_t ocol = cols / 2;
  out.assign(orow * ocol * ch, 0.0);
  arg.assign(orow * ocol * ch, 0);
  for (std::size_t h = 0; h < orow; ++h) {
    for (std::size_t w = 0; w < ocol; ++w) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = ((2 * h) * cols + 2 * w) * ch + c;
        for (std::size_t dh = 0; dh < 2; ++dh) {
          for (std::size_t dw = 0; dw < 2; ++dw) {
            const std::size_t idx = ((2 * h + dh) * cols + (2 * w + dw)) * ch + c;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (h * ocol + w) * ch + c;
        out[o] = in[best];
        arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void Relu(std::vector<double>& values) {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

// out = W x + b for W laid out [out][in].
void Dense(std::span<const double> x, const Tensor& weight, const Tensor& bias,
           std::vector<double>& out) {
  const std::size_t nout = bias.size();
  const std::size_t nin = x.size();
  out.assign(nout, 0.0);
  for (std::size_t o = 0; o < nout; ++o) {
    out[o] = bias[o] + Dot(weight.data().subspan(o * nin, nin), x);
  }
}

void DenseBackward(std::span<const double> x, const Tensor& weight, std::span<const double> dout,
                   Tensor& dweight, Tensor& dbias, std::vector<double>* dx) {
  const std::size_t nout = dout.size();
  const std::size_t nin = x.size();
  if (dx) dx->assign(nin, 0.0);
  for (std::size_t o = 0; o < nout; ++o) {
    const double g = dout[o];
    dbias[o] += g;
    double* dw = dweight.data().data() + o * nin;
    const double* wrow = weight.data().data() + o * nin;
    for (std::size_t i = 0; i < nin; ++i) {
      dw[i] += g * x[i];
      if (dx) (*dx)[i] += g * wrow[i];
    }
  }
}

std::vector<double> SoftmaxVector(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) total += (v = std::exp(v - peak));
  for (double& v : p) v /= total;
  return p;
}

std::vector<Tensor> ZerosLike(const std::vector<Tensor>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor& t : params) out.emplace_back(t.shape(), 0.0);
  return out;
}

}  // namespace

struct Classifier::Trace {
  std::vector<double> input;
  std::vector<double> conv1;  // post-ReLU
  std::vector<double> pool1;
  std::vector<std::uint32_t> pool1_arg;
  std::vector<double> conv2;  // post-ReLU, the feature cut
  std::vector<double> pool2;
  std::vector<std::uint32_t> pool2_arg;
  std::vector<double> hidden;  // post-ReLU, empty without a hidden layer
  std::vector<double> logits;
};

Classifier Classifier::Initialize(const Architecture& arch, std::uint64_t seed) {
  Require(arch.num_classes >= 2, Errc::kInvalidArgument, "classifier needs >= 2 classes");
  Require(arch.height >= 4 && arch.width >= 4, Errc::kInvalidArgument,
          "classifier input must be at least 4x4");
  Require(arch.channels >= 1 && arch.conv1_channels >= 1 && arch.feature_channels >= 1,
          Errc::kInvalidArgument, "classifier channel counts must be >= 1");
  Classifier model;
  model.arch_ = arch;
  Rng rng(seed);
  auto he = [&rng](std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data()) v = rng.Normal(0.0, stddev);
    return t;
  };
  const std::size_t c1 = arch.conv1_channels;
  const std::size_t d = arch.feature_channels;
  model.params_.push_back(he({c1, 3, 3, arch.channels}, 9 * arch.channels));
  model.params_.emplace_back(std::vector<std::size_t>{c1});
  model.params_.push_back(he({d, 3, 3, c1}, 9 * c1));
  model.params_.emplace_back(std::vector<std::size_t>{d});
  model.names_ = {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias"};
  if (arch.hidden_units) {
    model.params_.push_back(he({arch.hidden_units, arch.flat_size()}, arch.flat_size()));
    model.params_.emplace_back(std::vector<std::size_t>{arch.hidden_units});
    model.names_.push_back("fc.weight");
    model.names_.push_back("fc.bias");
  }
  const std::size_t pen = arch.penultimate_size();
  model.params_.push_back(he({arch.num_classes, pen}, pen));
  model.params_.emplace_back(std::vector<std::size_t>{arch.num_classes});
  model.names_.push_back("out.weight");
  model.names_.push_back("out.bias");
  return model;
}

std::vector<Tensor>& Classifier::mutable_parameters() {
  Require(!frozen_, Errc::kState, "classifier is frozen; parameters are read-only");
  return params_;
}

std::uint64_t Classifier::Checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const Tensor& t : params_) {
    for (double v : t.data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        hash ^= (bits >> (8 * i)) & 0xff;
        hash *= 0x100000001b3ULL;
      }
    }
  }
  return hash;
}

void Classifier::CheckInput(const Image& image) const {
  if (image.channels != arch_.channels || image.height != arch_.height ||
      image.width != arch_.width) {
    const std::size_t got[] = {image.channels, image.height, image.width};
    const std::size_t want[] = {arch_.channels, arch_.height, arch_.width};
    Fail(Errc::kDimensionMismatch, "image shape " + ShapeString(got) +
                                       " does not match model input " + ShapeString(want));
  }
  Require(image.pixels.size() == image.channels * image.height * image.width,
          Errc::kDimensionMismatch, "image pixel buffer does not match its shape");
}

void Classifier::RequireFrozen() const {
  Require(frozen_, Errc::kState, "classifier must be frozen before inference");
}

void Classifier::RunForward(const Image& image, Trace& trace) const {
  const Architecture& a = arch_;
  trace.input = image.pixels;
  Conv3x3(trace.input, a.height, a.width, a.channels, params_[kConv1W], params_[kConv1B],
          a.conv1_channels, trace.conv1);
  Relu(trace.conv1);
  MaxPool2x2(trace.conv1, a.height, a.width, a.conv1_channels, trace.pool1, trace.pool1_arg);
  Conv3x3(trace.pool1, a.feature_height(), a.feature_width(), a.conv1_channels,
          params_[kConv2W], params_[kConv2B], a.feature_channels, trace.conv2);
  Relu(trace.conv2);
  RunHead(trace);
}

void Classifier::RunHead(Trace& trace) const {
  const Architecture& a = arch_;
  if (a.head_pooling == HeadPooling::kGlobalMax) {
    GlobalMaxPool(trace.conv2, a.feature_height() * a.feature_width(), a.feature_channels,
                  trace.pool2, trace.pool2_arg);
  } else {
    MaxPool2x2(trace.conv2, a.feature_height(), a.feature_width(), a.feature_channels,
               trace.pool2, trace.pool2_arg);
  }
  std::size_t next = kConv2B + 1;
  const std::vector<double>* penultimate = &trace.pool2;
  if (a.hidden_units) {
    Dense(trace.pool2, params_[next], params_[next + 1], trace.hidden);
    Relu(trace.hidden);
    penultimate = &trace.hidden;
    next += 2;
  } else {
    trace.hidden.clear();
  }
  Dense(*penultimate, params_[next], params_[next + 1], trace.logits);
}

Activations Classifier::Forward(const Image& image) const {
  RequireFrozen();
  CheckInput(image);
  Trace trace;
  RunForward(image, trace);
  Activations out;
  out.features = FeatureMap(arch_.feature_height(), arch_.feature_width(), arch_.feature_channels);
  out.features.data = std::move(trace.conv2);
  out.penultimate = arch_.hidden_units ? std::move(trace.hidden) : std::move(trace.pool2);
  out.logits = std::move(trace.logits);
  return out;
}

FeatureMap Classifier::ExtractFeatures(const Image& image) const {
  return Forward(image).features;
}

std::vector<double> Classifier::Logits(const Image& image) const {
  return Forward(image).logits;
}

std::vector<double> Classifier::HeadLogits(const FeatureMap& features) const {
  RequireFrozen();
  Require(features.height == arch_.feature_height() && features.width == arch_.feature_width() &&
              features.depth == arch_.feature_channels &&
              features.data.size() == features.height * features.width * features.depth,
          Errc::kDimensionMismatch, "feature map does not match the model's feature cut");
  Trace trace;
  trace.conv2 = features.data;
  RunHead(trace);
  return trace.logits;
}

std::uint32_t Classifier::Predict(const Image& image) const {
  const std::vector<double> logits = Logits(image);
  return static_cast<std::uint32_t>(ArgMax(logits));
}

double Classifier::LossAndGradient(std::span<const Image* const> batch,
                                   std::vector<Tensor>* gradients) const {
  Require(!batch.empty(), Errc::kInvalidArgument, "empty training batch");
  const Architecture& a = arch_;
  const std::size_t n = batch.size();
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<Tensor>> per_sample(gradients ? n : 0);

  ParallelFor(n, [&](std::size_t s) {
    const Image& image = *batch[s];
    CheckInput(image);
    Require(image.label.has_value() && *image.label < a.num_classes, Errc::kInvalidArgument,
            "training image has a missing or out-of-range label");
    Trace t;
    RunForward(image, t);
    const std::vector<double> prob = SoftmaxVector(t.logits);
    losses[s] = -std::log(std::max(prob[*image.label], 1e-300));
    if (!gradients) return;

    std::vector<Tensor> g = ZerosLike(params_);
    std::vector<double> dlogits = prob;
    dlogits[*image.label] -= 1.0;

    std::size_t out_w = a.hidden_units ? kConv2B + 3 : kConv2B + 1;
    const std::vector<double>& pen = a.hidden_units ? t.hidden : t.pool2;
    std::vector<double> dpen;
    DenseBackward(pen, params_[out_w], dlogits, g[out_w], g[out_w + 1], &dpen);

    std::vector<double> dpool2;
    if (a.hidden_units) {
      for (std::size_t i = 0; i < dpen.size(); ++i) {
        if (t.hidden[i] <= 0.0) dpen[i] = 0.0;
      }
      const std::size_t fc = kConv2B + 1;
      DenseBackward(t.pool2, params_[fc], dpen, g[fc], g[fc + 1], &dpool2);
    } else {
      dpool2 = std::move(dpen);
    }

    std::vector<double> dconv2(t.conv2.size(), 0.0);
    for (std::size_t i = 0; i < dpool2.size(); ++i) dconv2[t.pool2_arg[i]] += dpool2[i];
    for (std::size_t i = 0; i < dconv2.size(); ++i) {
      if (t.conv2[i] <= 0.0) dconv2[i] = 0.0;
    }
    std::vector<double> dpool1;
    Conv3x3Backward(t.pool1, a.feature_height(), a.feature_width(), a.conv1_channels,
                    params_[kConv2W], a.feature_channels, dconv2, g[kConv2W], g[kConv2B],
                    &dpool1);

    std::vector<double> dconv1(t.conv1.size(), 0.0);
    for (std::size_t i = 0; i < dpool1.size(); ++i) dconv1[t.pool1_arg[i]] += dpool1[i];
    for (std::size_t i = 0; i < dconv1.size(); ++i) {
      if (t.conv1[i] <= 0.0) dconv1[i] = 0.0;
    }
    Conv3x3Backward(t.input, a.height, a.width, a.channels, params_[kConv1W], a.conv1_channels,
                    dconv1, g[kConv1W], g[kConv1B], nullptr);
    per_sample[s] = std::move(g);
  });

  // Fixed summation order keeps results independent of the worker count.
  const double scale = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (double l : losses) loss += l;
  if (gradients) {
    *gradients = ZerosLike(params_);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t p = 0; p < params_.size(); ++p) {
        auto dst = (*gradients)[p].data();
        auto src = per_sample[s][p].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
    for (Tensor& t : *gradients) {
      for (double& v : t.data()) v *= scale;
    }
  }
  return loss * scale;
}

PixelBox Classifier::ReceptiveField(std::size_t h, std::size_t w) const {
  // (kernel, stride, padding) of every layer up to the feature cut.
  struct Layer {
    long kernel, stride, pad;
  };
  constexpr Layer kLayers[] = {{3, 1, 1}, {2, 2, 0}, {3, 1, 1}};
  long left = 0, extent = 1, jump = 1;
  for (const Layer& l : kLayers) {
    left -= l.pad * jump;
    extent += (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  auto clip = [](long v, std::size_t limit) {
    return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(limit) - 1));
  };
  const long top = left + static_cast<long>(h) * jump;
  const long lft = left + static_cast<long>(w) * jump;
  return PixelBox{clip(top, arch_.height), clip(lft, arch_.width),
                  clip(top + extent - 1, arch_.height), clip(lft + extent - 1, arch_.width)};
}

void Classifier::Save(const std::string& path) const {
  io::Writer out;
  out.Magic(std::string_view(kModelMagic, 8));
  for (std::size_t v : {arch_.channels, arch_.height, arch_.width, arch_.conv1_channels,
                        arch_.feature_channels, arch_.hidden_units}) {
    out.U32(static_cast<std::uint32_t>(v));
  }
  out.U32(arch_.num_classes);
  out.U32(static_cast<std::uint32_t>(arch_.head_pooling));
  out.U32(frozen_ ? 1 : 0);
  for (const Tensor& t : params_) {
    out.U64(t.size());
    out.F64s(t.data());
  }
  out.WriteFile(path);
}

Classifier Classifier::Load(const std::string& path) {
  io::Reader in = io::Reader::FromFile(path);
  in.ExpectMagic(std::string_view(kModelMagic, 8));
  Architecture arch;
  arch.channels = in.U32();
  arch.height = in.U32();
  arch.width = in.U32();
  arch.conv1_channels = in.U32();
  arch.feature_channels = in.U32();
  arch.hidden_units = in.U32();
  arch.num_classes = in.U32();
  const std::uint32_t pooling = in.U32();
  Require(pooling <= 1, Errc::kFormat, "inconsistent record: unknown head pooling " +
                                           std::to_string(pooling));
  arch.head_pooling = static_cast<HeadPooling>(pooling);
  const bool frozen = in.U32() != 0;
  Classifier model = Initialize(arch, 0);
  in.set_context("classifier parameters");
  for (Tensor& t : model.params_) {
    const std::uint64_t count = in.U64();
    Require(count == t.size(), Errc::kFormat,
            "inconsistent record: parameter tensor size " + std::to_string(count) +
                " does not match the architecture");
    in.F64s(t.data());
  }
  Require(in.AtEnd(), Errc::kFormat, "trailing bytes after classifier parameters");
  model.frozen_ = frozen;
  return model;
}

Classifier TrainClassifier(const Dataset& train, const ClassifierConfig& config,
                           std::vector<double>* epoch_losses) {
  Require(!train.empty(), Errc::kInvalidArgument, "train_classifier: empty dataset");
  Require(train.num_classes >= 2, Errc::kInvalidArgument, "train_classifier: needs >= 2 classes");
  Require(config.epochs >= 1 && config.learning_rate > 0.0, Errc::kInvalidArgument,
          "train_classifier: epochs >= 1 and learning rate > 0 required");
  const Image& first = train.images.front();
  for (const Image& image : train.images) {
    Require(image.label.has_value() && *image.label < train.num_classes,
            Errc::kInvalidArgument, "train_classifier: label out of range");
  }

  Architecture arch;
  arch.channels = first.channels;
  arch.height = first.height;
  arch.width = first.width;
  arch.conv1_channels = config.conv1_channels;
  arch.feature_channels = config.feature_channels;
  arch.hidden_units = config.hidden_units;
  arch.head_pooling = config.head_pooling;
  arch.num_classes = train.num_classes;
  Classifier model = Classifier::Initialize(arch, MixSeed(config.seed, 1));

  std::vector<Tensor> velocity;
  for (const Tensor& t : model.parameters()) velocity.emplace_back(t.shape(), 0.0);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = config.batch_size == 0 ? train.size() : config.batch_size;
  Rng rng(MixSeed(config.seed, 2));
  if (epoch_losses) epoch_losses->clear();

  std::vector<const Image*> members;
  std::vector<Tensor> grads;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.batch_size != 0) rng.Shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      members.clear();
      for (std::size_t k = start; k < stop; ++k) members.push_back(&train.images[order[k]]);
      loss_sum += model.LossAndGradient(members, &grads);
      ++batches;
      std::vector<Tensor>& params = model.mutable_parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params[p].data();
        auto v = velocity[p].data();
        auto g = grads[p].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = config.momentum * v[i] + g[i];
          w[i] -= config.learning_rate * v[i];
        }
      }
    }
    if (epoch_losses) epoch_losses->push_back(loss_sum / static_cast<double>(batches));
  }
  return model;
}

double Accuracy(const Classifier& model, const Dataset& dataset) {
  Require(!dataset.empty(), Errc::kInvalidArgument, "accuracy: empty dataset");
  std::vector<std::uint8_t> hit(dataset.size(), 0);
  ParallelFor(dataset.size(), [&](std::size_t i) {
    const Image& image = dataset.images[i];
    hit[i] = image.label && model.Predict(image) == *image.label ? 1 : 0;
  });
  const std::size_t correct = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace codeood
