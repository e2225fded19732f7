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

#ifndef TADET_PIPELINE_HPP
#define TADET_PIPELINE_HPP

#include <functional>
#include <string>
#include <vector>

#include "tadet/classifier.hpp"
#include "tadet/evaluation.hpp"
#include "tadet/features.hpp"
#include "tadet/preprocess.hpp"
#include "tadet/recording.hpp"
#include "tadet/ta_envelope.hpp"

namespace tadet {

// Everything the cross-validation needs from one subject, derived once from
// the raw recording: preprocessed-rate feature matrices per channel, per-row
// burst labels, and the per-sample TA truth.
struct SubjectData {
  std::string id;
  AnnotationTrack annotations;
  double fs = 64.0;
  std::size_t n_samples = 0;
  std::vector<FeatureMatrix> features;
  std::vector<std::vector<int8_t>> burst_labels;  // per channel, per grid row
  std::vector<int8_t> ta_sample_labels;           // per sample
};

SubjectData prepare_subject(const std::string& id, const Recording& raw,
                            const AnnotationTrack& ann, const PreprocessParams& pp = {});

// Runs fn(0..n-1) across up to `threads` workers (0 = hardware concurrency).
// Rethrows the first worker exception.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct LosoOptions {
  double svm_c = 1.0;
  double auc_threshold = 0.6;
  double median_window_s = 3.0;
  std::vector<double> min_sep_grid;  // empty = standard 2.5..50 grid
  double epoch_minutes = 20.0;
  int threads = 0;
};

struct FoldResult {
  std::string subject;
  std::vector<std::string> selected_features;
  double min_sep_s = 0.0;
  double eer_threshold = 0.0;
  double burst_auc_channel_avg = -1.0;    // -1 when undefined on this subject
  double burst_auc_single_median = -1.0;
  double ta_envelope_auc = -1.0;
  MetricEntry ta_sample_metrics;  // at the fold's equal-error threshold
  std::size_t n_epochs_labeled = 0;
  std::size_t n_epochs_correct = 0;
};

// Full leave-one-subject-out protocol: per fold, feature selection and SVM
// training on the training subjects, minimum-separation optimization of the
// TA envelope on the training subjects, equal-error thresholding, then
// evaluation on the held-out subject.
std::vector<FoldResult> run_loso(const std::vector<SubjectData>& subjects,
                                 const LosoOptions& opts);

// Trains on every subject (the deployable model): feature selection, SVM,
// and the envelope separation sweep; the chosen separation is recorded in
// training_metadata as min_sep_s.
LinearModel train_full(const std::vector<SubjectData>& subjects, const LosoOptions& opts);

// Per-channel confidence traces at the subject's sample grid.
std::vector<ScoreTrace> channel_score_traces(const LinearModel& model,
                                             const SubjectData& subject);

// Median-filtered per channel, averaged, gap-filled summary score.
ScoreTrace filtered_mean_score(const LinearModel& model, const SubjectData& subject,
                               double median_window_s);

// Writes report.txt (human table), report.kv (key=value) and folds.csv.
void write_loso_report(const std::vector<FoldResult>& results, const std::string& out_dir);

}  // namespace tadet

#endif  // TADET_PIPELINE_HPP
