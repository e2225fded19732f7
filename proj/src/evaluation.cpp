/*
 * Copyright 2026 The tadet authors.
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

#include "tadet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tadet/classifier.hpp"
#include "tadet/errors.hpp"

namespace tadet {

std::vector<LosoFold> loso_split(const std::vector<std::string>& subject_ids) {
  if (subject_ids.size() < 2) throw ValidationError("loso_split: need at least 2 subjects");
  std::set<std::string> seen;
  for (const auto& id : subject_ids) {
    if (!seen.insert(id).second)
      throw ValidationError("loso_split: duplicate subject id '" + id + "'");
  }
  std::vector<LosoFold> folds;
  folds.reserve(subject_ids.size());
  for (std::size_t t = 0; t < subject_ids.size(); ++t) {
    LosoFold fold;
    fold.test = t;
    for (std::size_t s = 0; s < subject_ids.size(); ++s)
      if (s != t) fold.train.push_back(s);
    folds.push_back(std::move(fold));
  }
  return folds;
}

MetricEntry compute_metrics(std::span<const double> scores, std::span<const uint8_t> labels,
                            double threshold) {
  if (scores.size() != labels.size()) throw ValidationError("compute_metrics: size mismatch");
  if (scores.empty()) throw ValidationError("compute_metrics: empty input");

  MetricEntry m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > threshold;
    const bool truth = labels[i] != 0;
    if (pred && truth) ++m.tp;
    else if (pred && !truth) ++m.fp;
    else if (!pred && truth) ++m.fn;
    else ++m.tn;
  }
  const double n = static_cast<double>(scores.size());
  const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
  const double fn = static_cast<double>(m.fn), tn = static_cast<double>(m.tn);

  m.accuracy = (tp + tn) / n;
  m.f1 = (2.0 * tp + fp + fn) > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  m.sensitivity = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
  m.specificity = (tn + fp) > 0.0 ? tn / (tn + fp) : 0.0;

  const double p_observed = (tp + tn) / n;
  const double p_expected = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n);
  m.kappa = (1.0 - p_expected) != 0.0 ? (p_observed - p_expected) / (1.0 - p_expected) : 0.0;

  const bool has_pos = m.tp + m.fn > 0;
  const bool has_neg = m.tn + m.fp > 0;
  if (has_pos && has_neg) m.auc = feature_auc(scores, labels);
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<std::pair<double, double>> bootstrap_interval(
    std::span<const double> per_subject_metric, double level, std::size_t resamples,
    uint64_t seed) {
  const std::size_t n = per_subject_metric.size();
  if (n < 10) return std::nullopt;
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap level must be in (0,1)");

  std::mt19937_64 rng(seed);
  std::vector<double> medians(resamples);
  std::vector<double> sample(n);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i)
      sample[i] = per_subject_metric[rng() % n];
    medians[b] = median(sample);
  }
  std::sort(medians.begin(), medians.end());
  const double alpha = 1.0 - level;
  const auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(resamples - 1)));
    return medians[std::min(idx, resamples - 1)];
  };
  return std::make_pair(pick(alpha / 2.0), pick(1.0 - alpha / 2.0));
}

double equal_error_threshold(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ValidationError("equal_error_threshold: bad input");
  std::size_t n_pos = 0, n_neg = 0;
  for (uint8_t l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("equal_error_threshold: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Sweep the threshold downward; after each distinct score value joins the
  // predicted-positive side, check |sens - spec|.
  double best_gap = std::abs(0.0 - 1.0);
  double best_threshold = scores[order[0]] + 1.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) ++tp;
      else ++fp;
    }
    const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double spec =
        static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
    const double gap = std::abs(sens - spec);
    if (gap < best_gap) {
      best_gap = gap;
      const double v = scores[order[i]];
      best_threshold = (j + 1 < order.size()) ? 0.5 * (v + scores[order[j + 1]]) : v - 1.0;
    }
    i = j + 1;
  }
  return best_threshold;
}

}  // namespace tadet
