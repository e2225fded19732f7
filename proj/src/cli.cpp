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

#include "tadet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "tadet/errors.hpp"
#include "tadet/pipeline.hpp"
#include "tadet/signal_io.hpp"
#include "tadet/synth.hpp"

namespace tadet {
namespace {

namespace fs = std::filesystem;

struct CommonIo {
  std::string input;
  std::string format = "csv";
  double fs_override = 0.0;  // 0 = unknown / use sidecar
};

Recording load_recording(const CommonIo& io) {
  std::optional<double> fs;
  if (io.fs_override > 0.0) fs = io.fs_override;
  if (io.format == "edf") return read_recording_edf(io.input);
  if (io.format == "csv") return read_recording_csv(io.input, fs);
  throw ValidationError("unknown --format '" + io.format + "' (expected edf or csv)");
}

// Recordings already at the pipeline rate are taken as preprocessed.
Recording ensure_preprocessed(const Recording& rec, const PreprocessParams& pp) {
  if (std::abs(rec.sample_rate - pp.target_rate_hz) < 1e-9) return rec;
  return preprocess_recording(rec, pp);
}

std::string subject_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subj%03zu", index + 1);
  return buf;
}

// Subjects in a data directory: every "<stem>.csv" with a "<stem>.ann.csv"
// companion, excluding sidecar files.
std::vector<std::string> discover_subject_stems(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ParseError("data directory '" + dir + "' does not exist");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    const std::string stem = name.substr(0, name.size() - 4);
    if (stem.size() >= 4 && stem.substr(stem.size() - 4) == ".ann") continue;
    if (stem.size() >= 5 && stem.substr(stem.size() - 5) == ".mask") continue;
    if (stem.size() >= 6 && stem.substr(stem.size() - 6) == ".valid") continue;
    if (stem.find(".features") != std::string::npos) continue;
    stems.push_back(stem);
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw ParseError("no recordings found in '" + dir + "'");
  return stems;
}

std::vector<SubjectData> load_subjects(const std::string& dir, double fs_override, int threads) {
  const auto stems = discover_subject_stems(dir);
  std::vector<SubjectData> subjects(stems.size());
  parallel_for(stems.size(), threads, [&](std::size_t i) {
    const std::string rec_path = dir + "/" + stems[i] + ".csv";
    const std::string ann_path = dir + "/" + stems[i] + ".ann.csv";
    if (!fs::exists(ann_path))
      throw ParseError("missing annotations '" + ann_path + "' for recording '" + rec_path + "'");
    std::optional<double> fs;
    if (fs_override > 0.0) fs = fs_override;
    const Recording raw = read_recording_csv(rec_path, fs);
    const AnnotationTrack ann = read_annotations(ann_path);
    subjects[i] = prepare_subject(stems[i], raw, ann);
  });
  return subjects;
}

double min_sep_from_model(const LinearModel& model) {
  // training_metadata is ";"-separated key=value pairs.
  std::stringstream ss(model.training_metadata);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    if (item.substr(0, eq) == "min_sep_s") return std::stod(item.substr(eq + 1));
  }
  return 10.0;  // documented fallback when the model carries no trained value
}

void write_score_csv(const std::vector<ScoreTrace>& traces,
                     const std::vector<std::string>& channels, double fs,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "t_s";
  for (const auto& ch : channels) out << ",score__" << ch;
  out << "\n";
  const std::size_t n = traces.empty() ? 0 : traces[0].values.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << format_double(static_cast<double>(i) / fs);
    for (const auto& t : traces) out << "," << format_double(t.values[i]);
    out << "\n";
  }
  bool any_invalid = false;
  for (const auto& t : traces)
    any_invalid =
        any_invalid || std::any_of(t.valid.begin(), t.valid.end(), [](uint8_t v) { return !v; });
  if (any_invalid) {
    std::ofstream mout(path + ".mask.csv", std::ios::binary);
    mout << "t_s";
    for (const auto& ch : channels) mout << ",score__" << ch;
    mout << "\n";
    for (std::size_t i = 0; i < n; ++i) {
      mout << format_double(static_cast<double>(i) / fs);
      for (const auto& t : traces) mout << "," << (t.valid[i] ? 1 : 0);
      mout << "\n";
    }
  }
}

std::vector<ScoreTrace> read_score_csv(const std::string& path, double fs,
                                       std::vector<std::string>* channels) {
  const Recording rec = read_recording_csv(path, fs);
  std::vector<ScoreTrace> traces(rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    traces[c].fs = fs;
    traces[c].values = rec.samples[c];
    traces[c].valid = rec.validity[c];
    std::string label = rec.channel_labels[c];
    if (label.rfind("score__", 0) == 0) label = label.substr(7);
    channels->push_back(label);
  }
  return traces;
}

// ---- subcommands ---------------------------------------------------------

int cmd_synth(uint64_t seed, double duration_s, std::size_t n_subjects, double fs,
              double ta_fraction, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < n_subjects; ++i) {
    SynthConfig cfg;
    cfg.seed = seed + i;
    cfg.duration_s = duration_s;
    cfg.fs = fs;
    cfg.ta_fraction = ta_fraction;
    auto [rec, ann] = generate_recording(cfg);
    const std::string stem = out_dir + "/" + subject_name(i);
    write_recording_csv(rec, stem + ".csv");
    write_annotations(ann, stem + ".ann.csv");
  }
  std::map<std::string, std::string> meta = {
      {"seed", std::to_string(seed)},
      {"duration_s", format_double(duration_s)},
      {"subjects", std::to_string(n_subjects)},
      {"sample_rate_hz", format_double(fs)},
      {"ta_fraction", format_double(ta_fraction)},
  };
  write_meta(meta, out_dir + "/synth.meta");
  return 0;
}

int cmd_preprocess(const CommonIo& io, const std::string& out_path) {
  const Recording raw = load_recording(io);
  const Recording pre = preprocess_recording(raw, {});
  write_recording_csv(pre, out_path);
  return 0;
}

int cmd_features(const CommonIo& io, const std::string& out_dir) {
  const Recording rec = load_recording(io);
  const Recording pre = ensure_preprocessed(rec, {});
  fs::create_directories(out_dir);
  const std::string stem = fs::path(io.input).stem().string();
  for (const auto& fm : build_feature_matrix(pre, classifier_bands()))
    write_feature_csv(fm, out_dir + "/" + stem + "__" + fm.channel + ".features.csv");
  return 0;
}

int cmd_train(const std::string& data_dir, double fs_override, double c, double auc_threshold,
              double median_window_s, int threads, const std::string& out_path) {
  const auto subjects = load_subjects(data_dir, fs_override, threads);
  LosoOptions opts;
  opts.svm_c = c;
  opts.auc_threshold = auc_threshold;
  opts.median_window_s = median_window_s;
  opts.threads = threads;
  const LinearModel model = train_full(subjects, opts);
  save_model(model, out_path);
  return 0;
}

int cmd_score(const CommonIo& io, const std::string& model_path, const std::string& out_path) {
  const LinearModel model = load_model(model_path);
  const Recording pre = ensure_preprocessed(load_recording(io), {});
  const auto mats = build_feature_matrix(pre, classifier_bands());
  std::vector<ScoreTrace> traces;
  std::vector<std::string> channels;
  for (const auto& fm : mats) {
    traces.push_back(decision_score(model, fm, pre.sample_count(), pre.sample_rate));
    channels.push_back(fm.channel);
  }
  write_score_csv(traces, channels, pre.sample_rate, out_path);
  write_meta({{"sample_rate_hz", format_double(pre.sample_rate)}},
             out_path + ".meta");
  return 0;
}

int cmd_detect_ta(const CommonIo& io, const std::string& scores_path,
                  const std::string& model_path, const std::string& annotations_path,
                  double threshold, double median_window_s, double min_sep_flag,
                  double epoch_minutes, const std::string& out_path) {
  std::vector<ScoreTrace> traces;
  std::vector<std::string> channels;
  double fs = 64.0;
  double min_sep = min_sep_flag;

  if (!scores_path.empty()) {
    traces = read_score_csv(scores_path, fs, &channels);
    if (min_sep <= 0.0 && !model_path.empty()) min_sep = min_sep_from_model(load_model(model_path));
  } else {
    if (model_path.empty()) throw ValidationError("detect-ta needs --model (or --scores)");
    const LinearModel model = load_model(model_path);
    const Recording pre = ensure_preprocessed(load_recording(io), {});
    fs = pre.sample_rate;
    for (const auto& fm : build_feature_matrix(pre, classifier_bands())) {
      traces.push_back(decision_score(model, fm, pre.sample_count(), pre.sample_rate));
      channels.push_back(fm.channel);
    }
    if (min_sep <= 0.0) min_sep = min_sep_from_model(model);
  }
  if (min_sep <= 0.0) min_sep = 10.0;
  if (min_sep < 2.5 || min_sep > 50.0)
    throw ValidationError("--min-sep must lie in [2.5, 50] seconds");

  for (auto& t : traces) t.values = moving_median(t.values, median_window_s, fs);
  const ScoreTrace summary = fill_gaps_nearest(average_channels(traces));
  const auto envelope = peak_spline_envelope(summary.values, min_sep, fs, 1);

  AnnotationTrack ann;
  if (!annotations_path.empty()) ann = read_annotations(annotations_path);
  const TaDecision decision = decide_ta(envelope, fs, threshold, epoch_minutes, ann);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + out_path + "' for writing");
  out << "t_s,score_mean,envelope,binary_ta\n";
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    out << format_double(static_cast<double>(i) / fs) << ","
        << format_double(summary.values[i]) << "," << format_double(envelope[i]) << ","
        << (decision.binary_ta[i] ? 1 : 0) << "\n";
  }
  write_meta(
      {
          {"threshold", format_double(threshold)},
          {"median_window_s", format_double(median_window_s)},
          {"min_sep_s", format_double(min_sep)},
          {"epoch_minutes", format_double(epoch_minutes)},
          {"sample_rate_hz", format_double(fs)},
      },
      out_path + ".meta");
  return 0;
}

int cmd_eval(const std::string& data_dir, double fs_override, double c, double auc_threshold,
             double median_window_s, double epoch_minutes, int threads,
             const std::string& out_dir) {
  const auto subjects = load_subjects(data_dir, fs_override, threads);
  LosoOptions opts;
  opts.svm_c = c;
  opts.auc_threshold = auc_threshold;
  opts.median_window_s = median_window_s;
  opts.epoch_minutes = epoch_minutes;
  opts.threads = threads;
  const auto results = run_loso(subjects, opts);
  write_loso_report(results, out_dir);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"burst / inter-burst and trace-alternant detection for neonatal EEG"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate labeled synthetic recordings");
  uint64_t seed = 1;
  double duration_s = 1800.0;
  std::size_t n_subjects = 1;
  double synth_fs = 256.0;
  double ta_fraction = 0.5;
  std::string out_dir;
  synth->add_option("--seed", seed, "RNG seed");
  synth->add_option("--duration", duration_s, "seconds per recording");
  synth->add_option("--subjects", n_subjects, "number of recordings");
  synth->add_option("--fs", synth_fs, "sampling rate in Hz");
  synth->add_option("--ta-fraction", ta_fraction, "fraction of TA activity");
  synth->add_option("--out", out_dir, "output directory")->required();

  // shared I/O options
  CommonIo io;
  auto add_io = [&io](CLI::App* cmd, bool required_input) {
    auto* opt = cmd->add_option("--input", io.input, "input recording");
    if (required_input) opt->required();
    cmd->add_option("--format", io.format, "edf or csv (default csv)");
    cmd->add_option("--fs", io.fs_override, "input sample rate for CSV recordings");
  };

  auto* preprocess = app.add_subcommand("preprocess", "artifact mask + 30 Hz FIR + 64 Hz");
  std::string pre_out;
  add_io(preprocess, true);
  preprocess->add_option("--out", pre_out, "output CSV path")->required();

  auto* features = app.add_subcommand("features", "per-channel feature matrices");
  std::string feat_out;
  add_io(features, true);
  features->add_option("--out", feat_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train the burst classifier on a directory");
  std::string train_data, train_out;
  double train_fs = 0.0, svm_c = 1.0, auc_threshold = 0.6, median_window = 3.0;
  int threads = 0;
  train->add_option("--data", train_data, "directory of <s>.csv + <s>.ann.csv")->required();
  train->add_option("--fs", train_fs, "recording sample rate override");
  train->add_option("--C", svm_c, "SVM regularization");
  train->add_option("--auc-threshold", auc_threshold, "feature selection AUC threshold");
  train->add_option("--median-window", median_window, "score median window (s)");
  train->add_option("--threads", threads, "worker threads (0 = auto)");
  train->add_option("--out", train_out, "model file path")->required();

  auto* score = app.add_subcommand("score", "per-channel confidence score traces");
  std::string score_model, score_out;
  add_io(score, true);
  score->add_option("--model", score_model, "model file")->required();
  score->add_option("--out", score_out, "output CSV path")->required();

  auto* detect = app.add_subcommand("detect-ta", "TA envelope + binary decision");
  std::string det_model, det_scores, det_ann, det_out;
  double det_threshold = 2.06, det_median = 3.0, det_min_sep = 0.0, det_epoch_min = 20.0;
  add_io(detect, false);
  detect->add_option("--scores", det_scores, "precomputed score CSV (alternative to --input)");
  detect->add_option("--model", det_model, "model file");
  detect->add_option("--annotations", det_ann, "annotation CSV for the epoch protocol");
  detect->add_option("--threshold", det_threshold, "envelope decision threshold");
  detect->add_option("--median-window", det_median, "score median window (s)");
  detect->add_option("--min-sep", det_min_sep, "peak separation (s); default: trained value");
  detect->add_option("--epoch-minutes", det_epoch_min, "epoch protocol length");
  detect->add_option("--out", det_out, "output CSV path")->required();

  auto* eval = app.add_subcommand("eval", "leave-one-subject-out evaluation");
  std::string eval_data, eval_out;
  double eval_fs = 0.0, eval_c = 1.0, eval_auc_thr = 0.6, eval_median = 3.0,
         eval_epoch_min = 20.0;
  int eval_threads = 0;
  std::string folds_kind = "loso";
  eval->add_option("--data", eval_data, "directory of <s>.csv + <s>.ann.csv")->required();
  eval->add_option("--folds", folds_kind, "cross-validation scheme (loso)");
  eval->add_option("--fs", eval_fs, "recording sample rate override");
  eval->add_option("--C", eval_c, "SVM regularization");
  eval->add_option("--auc-threshold", eval_auc_thr, "feature selection AUC threshold");
  eval->add_option("--median-window", eval_median, "score median window (s)");
  eval->add_option("--epoch-minutes", eval_epoch_min, "epoch protocol length");
  eval->add_option("--threads", eval_threads, "worker threads (0 = auto)");
  eval->add_option("--out", eval_out, "report directory")->required();

  auto fail = [](const char* kind, int code, const std::string& what) {
    std::string msg = what;
    std::replace(msg.begin(), msg.end(), '\n', ';');
    std::fprintf(stderr, "error kind=%s code=%d msg=\"%s\"\n", kind, code, msg.c_str());
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    return fail("usage", 1, e.what());
  }

  try {
    if (*synth) return cmd_synth(seed, duration_s, n_subjects, synth_fs, ta_fraction, out_dir);
    if (*preprocess) return cmd_preprocess(io, pre_out);
    if (*features) return cmd_features(io, feat_out);
    if (*train)
      return cmd_train(train_data, train_fs, svm_c, auc_threshold, median_window, threads,
                       train_out);
    if (*score) return cmd_score(io, score_model, score_out);
    if (*detect)
      return cmd_detect_ta(io, det_scores, det_model, det_ann, det_threshold, det_median,
                           det_min_sep, det_epoch_min, det_out);
    if (*eval) {
      if (folds_kind != "loso")
        throw ValidationError("only --folds loso is supported");
      return cmd_eval(eval_data, eval_fs, eval_c, eval_auc_thr, eval_median, eval_epoch_min,
                      eval_threads, eval_out);
    }
    return fail("usage", 1, "no subcommand given");
  } catch (const ParseError& e) {
    return fail("io", 2, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", 2, e.what());
  } catch (const ValidationError& e) {
    return fail("validation", 3, e.what());
  } catch (const NumericError& e) {
    return fail("numeric", 4, e.what());
  } catch (const std::exception& e) {
    return fail("numeric", 4, e.what());
  }
}

}  // namespace tadet
