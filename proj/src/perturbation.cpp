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

#include "codeood/perturbation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "codeood/error.hpp"
#include "codeood/metrics.hpp"
#include "codeood/parallel.hpp"
#include "codeood/rng.hpp"

namespace codeood {

namespace {

std::size_t Reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (i < 0) i = -i;
  if (i > last) i = 2 * last - i;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last));
}

Image Blur(const Image& in, double sigma) {
  if (sigma == 0.0) return in;
  double kernel[3][3];
  double total = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const double w = std::exp(-static_cast<double>(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      kernel[dy + 1][dx + 1] = w;
      total += w;
    }
  }
  for (auto& row : kernel) {
    for (double& w : row) w /= total;
  }
  Image out(in.channels, in.height, in.width);
  out.label = in.label;
  for (std::size_t h = 0; h < in.height; ++h) {
    for (std::size_t w = 0; w < in.width; ++w) {
      for (std::size_t c = 0; c < in.channels; ++c) {
        double sum = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const std::size_t y = Reflect(static_cast<std::ptrdiff_t>(h) + dy, in.height);
          for (int dx = -1; dx <= 1; ++dx) {
            const std::size_t x = Reflect(static_cast<std::ptrdiff_t>(w) + dx, in.width);
            sum += kernel[dy + 1][dx + 1] * in.at(y, x, c);
          }
        }
        out.at(h, w, c) = sum;
      }
    }
  }
  return out;
}

Image Noise(const Image& in, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Image out = in;
  for (double& px : out.pixels) {
    const double n = std::clamp(rng.Normal(0.5, 0.25), 0.0, 1.0);
    px = (1.0 - alpha) * px + alpha * n;
  }
  return out;
}

Image Rotate(const Image& in, double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a < 0.0) a += 360.0;
  if (a == 0.0) return in;
  const std::size_t rows = in.height;
  const std::size_t cols = in.width;
  Image out(in.channels, rows, cols);
  out.label = in.label;

  // Source pixel for output (y, x) under a counter-clockwise rotation:
  //   sx = cos a (x - cx) - sin a (y - cy) + cx
  //   sy = sin a (x - cx) + cos a (y - cy) + cy
  // The quarter turns below are the same map evaluated exactly.
  const bool square = rows == cols;
  if (a == 180.0 || (square && (a == 90.0 || a == 270.0))) {
    for (std::size_t y = 0; y < rows; ++y) {
      for (std::size_t x = 0; x < cols; ++x) {
        std::size_t sy, sx;
        if (a == 180.0) {
          sy = rows - 1 - y;
          sx = cols - 1 - x;
        } else if (a == 90.0) {
          sy = x;
          sx = cols - 1 - y;
        } else {
          sy = rows - 1 - x;
          sx = y;
        }
        for (std::size_t c = 0; c < in.channels; ++c) out.at(y, x, c) = in.at(sy, sx, c);
      }
    }
    return out;
  }

  const double rad = a * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cy = (static_cast<double>(rows) - 1.0) / 2.0;
  const double cx = (static_cast<double>(cols) - 1.0) / 2.0;
  auto sample = [&](std::ptrdiff_t y, std::ptrdiff_t x, std::size_t c) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(rows) ||
        x >= static_cast<std::ptrdiff_t>(cols)) {
      return 0.0;
    }
    return in.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  };
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double tx = sx - fx0;
      const double ty = sy - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0);
      const auto y0 = static_cast<std::ptrdiff_t>(fy0);
      for (std::size_t c = 0; c < in.channels; ++c) {
        const double v = (1.0 - ty) * ((1.0 - tx) * sample(y0, x0, c) + tx * sample(y0, x0 + 1, c)) +
                         ty * ((1.0 - tx) * sample(y0 + 1, x0, c) + tx * sample(y0 + 1, x0 + 1, c));
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

}  // namespace

AlphaRange LegalRange(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kBlur:
      return {0.0, 10.0};
    case PerturbationKind::kNoise:
      return {0.0, 1.0};
    case PerturbationKind::kBrightness:
      return {0.1, 1.0};
    case PerturbationKind::kRotationForth:
      return {0.0, 180.0};
    case PerturbationKind::kRotationBack:
      return {180.0, 360.0};
  }
  Fail(Errc::kInvalidArgument, "unknown perturbation kind");
}

std::string_view KindName(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kBlur:
      return "blur";
    case PerturbationKind::kNoise:
      return "noise";
    case PerturbationKind::kBrightness:
      return "brightness";
    case PerturbationKind::kRotationForth:
      return "rotation_forth";
    case PerturbationKind::kRotationBack:
      return "rotation_back";
  }
  return "unknown";
}

PerturbationKind ParseKind(std::string_view name) {
  for (PerturbationKind k : AllKinds()) {
    if (KindName(k) == name) return k;
  }
  Fail(Errc::kInvalidArgument, "unknown perturbation '" + std::string(name) + "'");
}

const std::vector<PerturbationKind>& AllKinds() {
  static const std::vector<PerturbationKind> kinds = {
      PerturbationKind::kBlur, PerturbationKind::kNoise, PerturbationKind::kBrightness,
      PerturbationKind::kRotationForth, PerturbationKind::kRotationBack};
  return kinds;
}

int IntensityDirection(PerturbationKind kind) {
  return kind == PerturbationKind::kBrightness || kind == PerturbationKind::kRotationBack ? -1 : 1;
}

void PerturbationSpec::Validate() const {
  const AlphaRange r = LegalRange(kind);
  if (!(alpha >= r.lo && alpha <= r.hi)) {
    std::ostringstream msg;
    msg << KindName(kind) << " magnitude " << alpha << " outside [" << r.lo << ", " << r.hi << "]";
    Fail(Errc::kInvalidArgument, msg.str());
  }
}

Image ApplyPerturbation(const Image& image, const PerturbationSpec& spec) {
  spec.Validate();
  Image out;
  switch (spec.kind) {
    case PerturbationKind::kBlur:
      out = Blur(image, spec.alpha);
      break;
    case PerturbationKind::kNoise:
      out = Noise(image, spec.alpha, spec.seed);
      break;
    case PerturbationKind::kBrightness:
      out = image;
      for (double& px : out.pixels) px *= spec.alpha;
      break;
    case PerturbationKind::kRotationForth:
    case PerturbationKind::kRotationBack:
      out = Rotate(image, spec.alpha);
      break;
  }
  for (double& px : out.pixels) px = std::clamp(px, 0.0, 1.0);
  return out;
}

double ExpectedConfidence(const Classifier& model, const Scorer& scorer,
                          std::span<const Image> test_set, const PerturbationSpec& spec) {
  Require(!test_set.empty(), Errc::kInvalidArgument, "expected_confidence: empty test set");
  spec.Validate();
  std::vector<double> scores(test_set.size());
  ParallelFor(test_set.size(), [&](std::size_t n) {
    PerturbationSpec local = spec;
    local.seed = MixSeed(spec.seed, n);
    scores[n] = scorer.Score(model.Forward(ApplyPerturbation(test_set[n], local)));
  });
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

void ValidateAlphas(PerturbationKind kind, std::span<const double> alphas) {
  Require(alphas.size() >= 3, Errc::kInvalidArgument, "sweep needs at least 3 magnitudes");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    PerturbationSpec{kind, alphas[i], 0}.Validate();
    if (i > 0) {
      Require(alphas[i] > alphas[i - 1], Errc::kInvalidArgument,
              "sweep magnitudes must be strictly increasing");
    }
  }
}

SweepResult SweepFromConfidences(std::string scorer, PerturbationKind kind,
                                 std::vector<double> alphas, std::vector<double> confidences) {
  SweepResult r;
  r.scorer = std::move(scorer);
  r.kind = kind;
  const Correlation corr = Spearman(alphas, confidences);
  r.alphas = std::move(alphas);
  r.expected_confidences = std::move(confidences);
  r.srcc = corr.value;
  // Avoid printing -0 for degenerate sweeps.
  r.intensity_srcc = corr.value == 0.0 ? 0.0 : IntensityDirection(kind) * corr.value;
  r.degenerate = corr.degenerate;
  return r;
}

std::vector<SweepResult> PerturbationSweep(const Classifier& model,
                                           std::span<const Scorer* const> scorers,
                                           std::span<const Image> test_set, PerturbationKind kind,
                                           std::span<const double> alphas, std::uint64_t seed) {
  Require(!test_set.empty(), Errc::kInvalidArgument, "perturbation_sweep: empty test set");
  ValidateAlphas(kind, alphas);
  const std::size_t n_img = test_set.size();
  const std::size_t n_alpha = alphas.size();
  // scores[(a * scorers + s) * images + n]
  std::vector<double> scores(n_alpha * scorers.size() * n_img);
  ParallelFor(n_alpha * n_img, [&](std::size_t job) {
    const std::size_t a = job / n_img;
    const std::size_t n = job % n_img;
    const PerturbationSpec spec{kind, alphas[a], MixSeed(seed, n)};
    const Activations act = model.Forward(ApplyPerturbation(test_set[n], spec));
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      scores[(a * scorers.size() + s) * n_img + n] = scorers[s]->Score(act);
    }
  });
  std::vector<SweepResult> results;
  for (std::size_t s = 0; s < scorers.size(); ++s) {
    std::vector<double> confidences(n_alpha);
    for (std::size_t a = 0; a < n_alpha; ++a) {
      double sum = 0.0;
      for (std::size_t n = 0; n < n_img; ++n) sum += scores[(a * scorers.size() + s) * n_img + n];
      confidences[a] = sum / static_cast<double>(n_img);
    }
    results.push_back(SweepFromConfidences(scorers[s]->name(), kind,
                                           std::vector<double>(alphas.begin(), alphas.end()),
                                           std::move(confidences)));
  }
  return results;
}

SweepResult PerturbationSweep(const Classifier& model, const Scorer& scorer,
                              std::span<const Image> test_set, PerturbationKind kind,
                              std::span<const double> alphas, std::uint64_t seed) {
  const Scorer* one[] = {&scorer};
  return PerturbationSweep(model, one, test_set, kind, alphas, seed).front();
}

std::vector<double> DefaultGrid(PerturbationKind kind) {
  std::size_t points = 11;
  if (kind == PerturbationKind::kBrightness) points = 10;
  if (kind == PerturbationKind::kRotationForth || kind == PerturbationKind::kRotationBack) {
    points = 13;
  }
  const AlphaRange r = LegalRange(kind);
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = r.lo + (r.hi - r.lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  grid.back() = r.hi;
  return grid;
}

namespace {

// Shortest text that reads back to the same double.
std::string Number(double v) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof(buf), v).ptr;
  return std::string(buf, end);
}

}  // namespace

std::string SweepCsv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "kind,alpha,expected_confidence\n";
  const std::string kind(KindName(sweep.kind));
  for (std::size_t i = 0; i < sweep.alphas.size(); ++i) {
    out << kind << ',' << Number(sweep.alphas[i]) << ',' << Number(sweep.expected_confidences[i])
        << '\n';
  }
  out << kind << ",srcc," << Number(sweep.srcc) << '\n';
  out << kind << ",intensity_srcc," << Number(sweep.intensity_srcc) << '\n';
  return out.str();
}

}  // namespace codeood
