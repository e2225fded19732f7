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

#ifndef TADET_EVALUATION_HPP
#define TADET_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tadet {

struct LosoFold {
  std::vector<std::size_t> train;  // indices into the subject list
  std::size_t test = 0;
};

// One fold per subject; folds partition the subjects exactly. Requires >= 2
// distinct subjects; duplicates are rejected.
std::vector<LosoFold> loso_split(const std::vector<std::string>& subject_ids);

struct MetricEntry {
  std::optional<double> auc;  // missing when only one class is present
  double kappa = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Confusion-matrix metrics at `threshold` (prediction = score > threshold)
// plus the threshold-free AUC. Sensitivity/specificity/F1 default to 0 when
// their denominators are empty.
MetricEntry compute_metrics(std::span<const double> scores, std::span<const uint8_t> labels,
                            double threshold);

double median(std::vector<double> values);  // by value: sorts a copy

// Percentile bootstrap interval for the median of a per-subject metric.
// Deterministic for a fixed seed; std::nullopt when fewer than 10 subjects.
std::optional<std::pair<double, double>> bootstrap_interval(
    std::span<const double> per_subject_metric, double level = 0.95,
    std::size_t resamples = 10000, uint64_t seed = 0x7ade7u);

// Threshold at which sensitivity and specificity cross (equal error rate),
// found by scanning candidate thresholds between sorted score values.
double equal_error_threshold(std::span<const double> scores, std::span<const uint8_t> labels);

}  // namespace tadet

#endif  // TADET_EVALUATION_HPP
