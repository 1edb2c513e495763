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

// Slow reference implementations used to cross-check the library. Nothing
// here calls the library's math; only its data types are shared.

#ifndef CODEOOD_TESTS_ORACLES_HPP_
#define CODEOOD_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "codeood/detector.hpp"
#include "codeood/metrics.hpp"
#include "codeood/tensor.hpp"

namespace codeood::oracle {

// softmax over the cells of fmap . kernel, as an [h][w] grid.
inline std::vector<std::vector<double>> Activation(const FeatureMap& f,
                                                   std::span<const double> kernel) {
  std::vector<std::vector<double>> z(f.height, std::vector<double>(f.width, 0.0));
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < f.height; ++h) {
    for (std::size_t w = 0; w < f.width; ++w) {
      for (std::size_t d = 0; d < f.depth; ++d) {
        z[h][w] += f.data[(h * f.width + w) * f.depth + d] * kernel[d];
      }
      top = std::max(top, z[h][w]);
    }
  }
  double total = 0.0;
  for (auto& row : z) {
    for (double& v : row) {
      v = std::exp(v - top);
      total += v;
    }
  }
  for (auto& row : z) {
    for (double& v : row) v /= total;
  }
  return z;
}

inline std::vector<std::vector<double>> Smoothed(const std::vector<std::vector<double>>& p) {
  const int rows = static_cast<int>(p.size());
  const int cols = static_cast<int>(p[0].size());
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols, 0.0));
  for (int h = 0; h < rows; ++h) {
    for (int w = 0; w < cols; ++w) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int y = h + dy;
          const int x = w + dx;
          if (y >= 0 && y < rows && x >= 0 && x < cols) out[h][w] += p[y][x];
        }
      }
    }
  }
  return out;
}

inline std::vector<double> Flatten(const std::vector<std::vector<double>>& grid) {
  std::vector<double> out;
  for (const auto& row : grid) out.insert(out.end(), row.begin(), row.end());
  return out;
}

inline std::vector<double> Kernel(const DetectorBank& bank, std::uint32_t cls, std::size_t i) {
  const std::size_t d = bank.depth();
  const std::size_t offset = (cls * bank.per_class() + i) * d;
  return std::vector<double>(bank.data().begin() + offset, bank.data().begin() + offset + d);
}

inline double LocalityTerm(const DetectorBank& bank, std::uint32_t cls, std::size_t i,
                           const FeatureMap& f) {
  const std::vector<double> s = Flatten(Smoothed(Activation(f, Kernel(bank, cls, i))));
  return -*std::max_element(s.begin(), s.end());
}

inline std::vector<double> Cumulative(const DetectorBank& bank, std::uint32_t cls,
                                      const FeatureMap& f) {
  std::vector<double> s(f.height * f.width, 0.0);
  for (std::size_t i = 0; i < bank.per_class(); ++i) {
    const std::vector<double> p = Flatten(Activation(f, Kernel(bank, cls, i)));
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += p[k];
  }
  return s;
}

inline double Locality(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  double total = 0.0;
  for (const LabeledFeatures& s : batch) {
    for (std::size_t i = 0; i < bank.per_class(); ++i) {
      total += LocalityTerm(bank, s.label, i, *s.features);
    }
  }
  return total;
}

inline double Unicity(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  double total = 0.0;
  for (const LabeledFeatures& s : batch) {
    const std::vector<double> c = Cumulative(bank, s.label, *s.features);
    total += std::max(0.0, *std::max_element(c.begin(), c.end()) - bank.threshold());
  }
  return total;
}

inline double Total(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  return Locality(bank, batch) + bank.lambda_u() * Unicity(bank, batch);
}

// Gap between the largest and second largest entry (infinite for one entry).
inline double TopGap(std::vector<double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end(), std::greater<>());
  return v[0] - v[1];
}

// Smallest distance of any max in the loss from a switch: a near tie between
// two cells of a smoothed map or of S, or max S sitting on the hinge corner.
inline double NonSmoothMargin(const DetectorBank& bank, std::span<const LabeledFeatures> batch) {
  double margin = std::numeric_limits<double>::infinity();
  for (const LabeledFeatures& s : batch) {
    for (std::size_t i = 0; i < bank.per_class(); ++i) {
      margin = std::min(margin,
                        TopGap(Flatten(Smoothed(Activation(*s.features, Kernel(bank, s.label, i))))));
    }
    const std::vector<double> c = Cumulative(bank, s.label, *s.features);
    margin = std::min(margin, TopGap(c));
    margin = std::min(margin, std::abs(*std::max_element(c.begin(), c.end()) - bank.threshold()));
  }
  return margin;
}

// |a - b| / max(|a|, |b|, floor).
inline double RelativeError(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central differences of Total() with respect to every kernel entry.
inline std::vector<double> NumericGradient(const DetectorBank& bank,
                                           std::span<const LabeledFeatures> batch, double step) {
  DetectorBank probe = bank;
  std::vector<double> grad(bank.data().size());
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double saved = probe.data()[k];
    probe.data()[k] = saved + step;
    const double up = Total(probe, batch);
    probe.data()[k] = saved - step;
    const double down = Total(probe, batch);
    probe.data()[k] = saved;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

// ---- metrics ----

// Fraction of (ID, OoD) pairs ordered correctly, ties counted 1/2.
inline double Auroc(std::span<const ScoreSample> samples) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const ScoreSample& a : samples) {
    if (!a.is_id) continue;
    for (const ScoreSample& b : samples) {
      if (b.is_id) continue;
      pairs += 1.0;
      if (a.score > b.score) wins += 1.0;
      if (a.score == b.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline std::vector<double> DistinctDescending(std::span<const ScoreSample> samples) {
  std::vector<double> t;
  for (const ScoreSample& s : samples) t.push_back(s.score);
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

struct Rates {
  double tp = 0.0;
  double fp = 0.0;
};

inline Rates CountAtOrAbove(std::span<const ScoreSample> samples, double threshold) {
  Rates r;
  for (const ScoreSample& s : samples) {
    if (s.score >= threshold) (s.is_id ? r.tp : r.fp) += 1.0;
  }
  return r;
}

inline double Positives(std::span<const ScoreSample> samples) {
  double n = 0.0;
  for (const ScoreSample& s : samples) n += s.is_id ? 1.0 : 0.0;
  return n;
}

// Sum over distinct thresholds of (recall step) x precision.
inline double Aupr(std::span<const ScoreSample> samples) {
  const double pos = Positives(samples);
  double area = 0.0;
  double prev_recall = 0.0;
  for (double t : DistinctDescending(samples)) {
    const Rates r = CountAtOrAbove(samples, t);
    const double recall = r.tp / pos;
    area += (recall - prev_recall) * (r.tp / (r.tp + r.fp));
    prev_recall = recall;
  }
  return area;
}

inline double Fpr95(std::span<const ScoreSample> samples) {
  const double pos = Positives(samples);
  const double neg = static_cast<double>(samples.size()) - pos;
  for (double t : DistinctDescending(samples)) {
    const Rates r = CountAtOrAbove(samples, t);
    if (r.tp / pos >= 0.95) return r.fp / neg;
  }
  return 1.0;
}

// Rank of each value: 1 + (#smaller) + (#equal others) / 2.
inline std::vector<double> Ranks(std::span<const double> v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) smaller += 1.0;
      if (j != i && v[j] == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + smaller + equal / 2.0;
  }
  return r;
}

// Pearson correlation of ranks; 0 when either side is constant.
inline double Spearman(std::span<const double> xs, std::span<const double> ys) {
  const std::vector<double> rx = Ranks(xs);
  const std::vector<double> ry = Ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace codeood::oracle

#endif  // CODEOOD_TESTS_ORACLES_HPP_
