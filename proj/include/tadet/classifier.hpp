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

#ifndef TADET_CLASSIFIER_HPP
#define TADET_CLASSIFIER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tadet/features.hpp"
#include "tadet/recording.hpp"

namespace tadet {

// Trained burst vs inter-burst model: z-score statistics plus linear weights
// over the selected features. Scores are oriented so positive means burst.
struct LinearModel {
  int version = 1;
  std::vector<std::string> bands;
  std::vector<std::string> selected_features;
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<double> weights;
  double bias = 0.0;
  std::string orientation = "positive=burst";
  std::string training_metadata;

  double score_row(std::span<const double> standardized) const;
};

// Pooled labeled epochs across channels and subjects. Rows hold the raw
// (unstandardized) feature values; only rows with every feature valid are
// kept.
struct LabeledEpochs {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> labels;  // 1 = burst, 0 = inter-burst
  std::vector<int> subject;     // index into subject_ids, one per row
  std::vector<std::string> subject_ids;
};

// Per-row label for one channel's matrix: 1 burst, 0 inter-burst, -1 when the
// epoch center lies outside any burst/inter-burst annotation (those rows are
// excluded from training). Interval containment is half-open, so a center on
// a boundary belongs to the interval that starts there.
std::vector<int8_t> label_epochs(const FeatureMatrix& fm, const AnnotationTrack& ann);

// Appends one channel's rows (valid rows with a label) to the pool.
void append_labeled_epochs(LabeledEpochs& pool, const FeatureMatrix& fm,
                           std::span<const int8_t> row_labels, int subject_index);

// Probability that a random positive value outranks a random negative one,
// ties counted half. Throws ValidationError when either class is missing.
double feature_auc(std::span<const double> values, std::span<const uint8_t> labels);

// Features whose median per-subject orientation-corrected AUC
// (max(auc, 1-auc)) exceeds the threshold. Requires >= 2 subjects; throws
// when no feature passes.
std::vector<std::string> select_features(const LabeledEpochs& data, double auc_threshold);

// L2-regularized hinge-loss SVM with inverse-class-frequency instance
// weights, trained by deterministic dual coordinate descent. The bias is
// carried as an augmented always-one feature and shares the L2 penalty.
// Features are z-scored first; zero-variance features are dropped with a
// warning on stderr.
LinearModel train_linear_svm(const LabeledEpochs& data,
                             const std::vector<std::string>& selected, double c = 1.0);

// Primal objective the trainer minimizes; exposed so independent optimizers
// can certify the solution. Rows must already be standardized + selected.
double svm_objective(const std::vector<std::vector<double>>& rows,
                     std::span<const uint8_t> labels, std::span<const double> weights,
                     double bias, double c,
                     std::span<const double> instance_weights);

// Inverse-class-frequency weights: n / (2 * n_class).
std::vector<double> class_balance_weights(std::span<const uint8_t> labels);

// Continuous confidence trace at fs_out. Epoch scores w.z + b are held
// between grid centers; rows with any selected feature invalid are filled
// from the nearest valid row and flagged invalid in the trace.
struct ScoreTrace {
  double fs = 0.0;
  std::vector<double> values;
  std::vector<uint8_t> valid;
};

// Score per feature-matrix row; valid flag mirrors the row's validity.
std::vector<double> grid_scores(const LinearModel& model, const FeatureMatrix& fm,
                                std::vector<uint8_t>* row_valid = nullptr);

ScoreTrace decision_score(const LinearModel& model, const FeatureMatrix& fm,
                          std::size_t n_samples, double fs_out);

// Versioned key=value text document; field set fixed by
// schema/linear_model.schema.
void save_model(const LinearModel& model, const std::string& path);
LinearModel load_model(const std::string& path);

}  // namespace tadet

#endif  // TADET_CLASSIFIER_HPP
