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

#include "tadet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tadet/errors.hpp"
#include "tadet/signal_io.hpp"

namespace tadet {

SubjectData prepare_subject(const std::string& id, const Recording& raw,
                            const AnnotationTrack& ann, const PreprocessParams& pp) {
  SubjectData subject;
  subject.id = id;
  subject.annotations = ann;
  const Recording pre = preprocess_recording(raw, pp);
  subject.fs = pre.sample_rate;
  subject.n_samples = pre.sample_count();
  subject.features = build_feature_matrix(pre, classifier_bands());
  subject.burst_labels.reserve(subject.features.size());
  for (const auto& fm : subject.features)
    subject.burst_labels.push_back(label_epochs(fm, ann));
  subject.ta_sample_labels = sample_ta_labels(ann, subject.n_samples, subject.fs);
  return subject;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ScoreTrace> channel_score_traces(const LinearModel& model,
                                             const SubjectData& subject) {
  std::vector<ScoreTrace> traces;
  traces.reserve(subject.features.size());
  for (const auto& fm : subject.features)
    traces.push_back(decision_score(model, fm, subject.n_samples, subject.fs));
  return traces;
}

ScoreTrace filtered_mean_score(const LinearModel& model, const SubjectData& subject,
                               double median_window_s) {
  auto traces = channel_score_traces(model, subject);
  for (auto& t : traces) {
    auto filtered = moving_median(t.values, median_window_s, subject.fs);
    t.values = std::move(filtered);
  }
  return fill_gaps_nearest(average_channels(traces));
}

namespace {

LabeledEpochs pool_epochs(const std::vector<SubjectData>& subjects,
                          const std::vector<std::size_t>& indices) {
  LabeledEpochs pool;
  for (std::size_t idx : indices) {
    const SubjectData& s = subjects[idx];
    pool.subject_ids.push_back(s.id);
    for (std::size_t c = 0; c < s.features.size(); ++c)
      append_labeled_epochs(pool, s.features[c], s.burst_labels[c],
                            static_cast<int>(idx));
  }
  return pool;
}

constexpr std::size_t kEnvelopeStride = 16;  // quarter-second at 64 Hz

// Burst-vs-interburst AUCs on the held-out subject: median across the four
// per-channel AUCs, and the AUC of the channel-mean score.
void test_burst_aucs(const LinearModel& model, const SubjectData& subject,
                     FoldResult* result) {
  std::vector<double> channel_aucs;
  std::vector<std::vector<double>> scores(subject.features.size());
  std::vector<std::vector<uint8_t>> valid(subject.features.size());
  for (std::size_t c = 0; c < subject.features.size(); ++c)
    scores[c] = grid_scores(model, subject.features[c], &valid[c]);

  for (std::size_t c = 0; c < subject.features.size(); ++c) {
    std::vector<double> v;
    std::vector<uint8_t> l;
    for (std::size_t r = 0; r < scores[c].size(); ++r) {
      if (subject.burst_labels[c][r] < 0 || !valid[c][r]) continue;
      v.push_back(scores[c][r]);
      l.push_back(subject.burst_labels[c][r] == 1 ? 1 : 0);
    }
    const bool has_pos = std::find(l.begin(), l.end(), uint8_t{1}) != l.end();
    const bool has_neg = std::find(l.begin(), l.end(), uint8_t{0}) != l.end();
    if (has_pos && has_neg) channel_aucs.push_back(feature_auc(v, l));
  }
  if (!channel_aucs.empty()) result->burst_auc_single_median = median(channel_aucs);

  // Channel-mean score on the common grid (labels are global, so use the
  // first channel's labels).
  const std::size_t rows = scores.empty() ? 0 : scores[0].size();
  std::vector<double> v;
  std::vector<uint8_t> l;
  for (std::size_t r = 0; r < rows; ++r) {
    if (subject.burst_labels[0][r] < 0) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      if (!valid[c][r]) continue;
      sum += scores[c][r];
      ++count;
    }
    if (count == 0) continue;
    v.push_back(sum / static_cast<double>(count));
    l.push_back(subject.burst_labels[0][r] == 1 ? 1 : 0);
  }
  const bool has_pos = std::find(l.begin(), l.end(), uint8_t{1}) != l.end();
  const bool has_neg = std::find(l.begin(), l.end(), uint8_t{0}) != l.end();
  if (has_pos && has_neg) result->burst_auc_channel_avg = feature_auc(v, l);
}

}  // namespace

std::vector<FoldResult> run_loso(const std::vector<SubjectData>& subjects,
                                 const LosoOptions& opts) {
  std::vector<std::string> ids;
  for (const auto& s : subjects) ids.push_back(s.id);
  const auto folds = loso_split(ids);
  const std::vector<double> grid =
      opts.min_sep_grid.empty() ? min_separation_grid() : opts.min_sep_grid;

  std::vector<FoldResult> results(folds.size());
  parallel_for(folds.size(), opts.threads, [&](std::size_t f) {
    const LosoFold& fold = folds[f];
    FoldResult result;
    result.subject = subjects[fold.test].id;

    LabeledEpochs pool = pool_epochs(subjects, fold.train);
    result.selected_features = select_features(pool, opts.auc_threshold);
    const LinearModel model = train_linear_svm(pool, result.selected_features, opts.svm_c);

    // Envelope parameters from the training subjects.
    std::vector<TaTrainingTrace> train_traces;
    train_traces.reserve(fold.train.size());
    for (std::size_t idx : fold.train) {
      TaTrainingTrace trace;
      trace.score = filtered_mean_score(model, subjects[idx], opts.median_window_s).values;
      trace.ta_label = subjects[idx].ta_sample_labels;
      train_traces.push_back(std::move(trace));
    }
    result.min_sep_s = optimize_min_separation(train_traces, grid, subjects[fold.test].fs);

    {
      std::vector<double> pooled_env;
      std::vector<uint8_t> pooled_labels;
      for (const auto& trace : train_traces) {
        const auto env = peak_spline_envelope(trace.score, result.min_sep_s,
                                              subjects[fold.test].fs, kEnvelopeStride);
        for (std::size_t i = 0, j = 0; i < trace.ta_label.size();
             i += kEnvelopeStride, ++j) {
          if (trace.ta_label[i] < 0) continue;
          pooled_env.push_back(env[j]);
          pooled_labels.push_back(trace.ta_label[i] == 1 ? 1 : 0);
        }
      }
      result.eer_threshold = equal_error_threshold(pooled_env, pooled_labels);
    }

    // Held-out subject.
    const SubjectData& test = subjects[fold.test];
    test_burst_aucs(model, test, &result);

    const ScoreTrace summary = filtered_mean_score(model, test, opts.median_window_s);
    const auto envelope =
        peak_spline_envelope(summary.values, result.min_sep_s, test.fs, 1);
    {
      std::vector<double> v;
      std::vector<uint8_t> l;
      for (std::size_t i = 0; i < envelope.size(); ++i) {
        if (test.ta_sample_labels[i] < 0) continue;
        v.push_back(envelope[i]);
        l.push_back(test.ta_sample_labels[i] == 1 ? 1 : 0);
      }
      const bool has_pos = std::find(l.begin(), l.end(), uint8_t{1}) != l.end();
      const bool has_neg = std::find(l.begin(), l.end(), uint8_t{0}) != l.end();
      if (has_pos && has_neg) {
        result.ta_envelope_auc = feature_auc(v, l);
        result.ta_sample_metrics = compute_metrics(v, l, result.eer_threshold);
      }
    }
    {
      const TaDecision decision = decide_ta(envelope, test.fs, result.eer_threshold,
                                            opts.epoch_minutes, test.annotations);
      for (const auto& epoch : decision.epochs) {
        if (epoch.truth < 0) continue;
        ++result.n_epochs_labeled;
        const bool predicted = epoch.mean_envelope > result.eer_threshold;
        if (predicted == (epoch.truth == 1)) ++result.n_epochs_correct;
      }
    }
    results[f] = std::move(result);
  });
  return results;
}

LinearModel train_full(const std::vector<SubjectData>& subjects, const LosoOptions& opts) {
  std::vector<std::size_t> all(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) all[i] = i;
  LabeledEpochs pool = pool_epochs(subjects, all);
  const auto selected = select_features(pool, opts.auc_threshold);
  LinearModel model = train_linear_svm(pool, selected, opts.svm_c);
  for (const auto& band : classifier_bands()) model.bands.push_back(band.name);

  const std::vector<double> grid =
      opts.min_sep_grid.empty() ? min_separation_grid() : opts.min_sep_grid;
  std::vector<TaTrainingTrace> traces(subjects.size());
  parallel_for(subjects.size(), opts.threads, [&](std::size_t i) {
    traces[i].score = filtered_mean_score(model, subjects[i], opts.median_window_s).values;
    traces[i].ta_label = subjects[i].ta_sample_labels;
  });
  double min_sep = grid.front();
  bool have_min_sep = false;
  try {
    min_sep = optimize_min_separation(traces, grid, subjects.front().fs);
    have_min_sep = true;
  } catch (const ValidationError&) {
    // Training data without both TA and non-TA stretches cannot drive the
    // sweep; fall back to the smallest grid value.
  }

  std::ostringstream meta;
  meta << "subjects=" << subjects.size() << ";rows=" << pool.rows.size()
       << ";C=" << format_double(opts.svm_c)
       << ";auc_threshold=" << format_double(opts.auc_threshold)
       << ";min_sep_s=" << format_double(min_sep)
       << ";min_sep_optimized=" << (have_min_sep ? 1 : 0);
  model.training_metadata = meta.str();
  return model;
}

void write_loso_report(const std::vector<FoldResult>& results, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::ofstream folds(out_dir + "/folds.csv", std::ios::binary);
  if (!folds) throw ParseError("cannot write " + out_dir + "/folds.csv");
  folds << "subject,selected_count,min_sep_s,eer_threshold,burst_auc_single_median,"
           "burst_auc_channel_avg,ta_envelope_auc,ta_sensitivity,ta_specificity,ta_kappa,"
           "ta_f1,ta_accuracy,epochs_labeled,epochs_correct\n";
  std::vector<double> burst_avg, burst_single, ta_auc, sens, spec;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& r : results) {
    folds << r.subject << "," << r.selected_features.size() << ","
          << format_double(r.min_sep_s) << "," << format_double(r.eer_threshold) << ","
          << format_double(r.burst_auc_single_median) << ","
          << format_double(r.burst_auc_channel_avg) << ","
          << format_double(r.ta_envelope_auc) << ","
          << format_double(r.ta_sample_metrics.sensitivity) << ","
          << format_double(r.ta_sample_metrics.specificity) << ","
          << format_double(r.ta_sample_metrics.kappa) << ","
          << format_double(r.ta_sample_metrics.f1) << ","
          << format_double(r.ta_sample_metrics.accuracy) << "," << r.n_epochs_labeled << ","
          << r.n_epochs_correct << "\n";
    if (r.burst_auc_channel_avg >= 0.0) burst_avg.push_back(r.burst_auc_channel_avg);
    if (r.burst_auc_single_median >= 0.0) burst_single.push_back(r.burst_auc_single_median);
    if (r.ta_envelope_auc >= 0.0) {
      ta_auc.push_back(r.ta_envelope_auc);
      sens.push_back(r.ta_sample_metrics.sensitivity);
      spec.push_back(r.ta_sample_metrics.specificity);
      tp += r.ta_sample_metrics.tp;
      fp += r.ta_sample_metrics.fp;
      fn += r.ta_sample_metrics.fn;
      tn += r.ta_sample_metrics.tn;
    }
  }

  std::map<std::string, std::string> kv;
  kv["folds"] = std::to_string(results.size());
  auto put_stats = [&](const std::string& key, std::vector<double>& values) {
    if (values.empty()) return;
    kv[key + "_median"] = format_double(median(values));
    if (auto ci = bootstrap_interval(values)) {
      kv[key + "_ci_low"] = format_double(ci->first);
      kv[key + "_ci_high"] = format_double(ci->second);
    }
  };
  put_stats("burst_auc_channel_avg", burst_avg);
  put_stats("burst_auc_single_median", burst_single);
  put_stats("ta_envelope_auc", ta_auc);
  const double pooled_sens =
      (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double pooled_spec =
      (tn + fp) > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
  kv["ta_pooled_sensitivity"] = format_double(pooled_sens);
  kv["ta_pooled_specificity"] = format_double(pooled_spec);
  write_meta(kv, out_dir + "/report.kv");

  std::ofstream report(out_dir + "/report.txt", std::ios::binary);
  if (!report) throw ParseError("cannot write " + out_dir + "/report.txt");
  report << "LOSO cross-validation over " << results.size() << " subjects\n\n";
  auto line = [&](const std::string& label, const std::string& key) {
    if (!kv.count(key + "_median")) return;
    report << "  " << label << ": " << kv[key + "_median"];
    if (kv.count(key + "_ci_low"))
      report << "  (95% CI " << kv[key + "_ci_low"] << " to " << kv[key + "_ci_high"] << ")";
    report << "\n";
  };
  line("burst detector AUC, channel-averaged score (median)", "burst_auc_channel_avg");
  line("burst detector AUC, single-channel median (median)", "burst_auc_single_median");
  line("TA envelope AUC (median)", "ta_envelope_auc");
  report << "  TA pooled sensitivity/specificity at the equal-error threshold: "
         << kv["ta_pooled_sensitivity"] << " / " << kv["ta_pooled_specificity"] << "\n";
}

}  // namespace tadet
