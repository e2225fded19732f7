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

#include "tadet/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "tadet/errors.hpp"
#include "tadet/signal_io.hpp"

namespace tadet {

double LinearModel::score_row(std::span<const double> standardized) const {
  double acc = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * standardized[i];
  return acc;
}

std::vector<int8_t> label_epochs(const FeatureMatrix& fm, const AnnotationTrack& ann) {
  std::vector<int8_t> labels(fm.rows(), -1);
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    const double t = fm.epoch_centers_s[r];
    if (ann.find(t, fm.channel, AnnotLabel::Burst)) {
      labels[r] = 1;
    } else if (ann.find(t, fm.channel, AnnotLabel::Interburst)) {
      labels[r] = 0;
    }
  }
  return labels;
}

void append_labeled_epochs(LabeledEpochs& pool, const FeatureMatrix& fm,
                           std::span<const int8_t> row_labels, int subject_index) {
  if (pool.feature_names.empty()) pool.feature_names = fm.feature_names;
  if (pool.feature_names != fm.feature_names)
    throw ValidationError("feature matrices disagree on the feature set");
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    if (row_labels[r] < 0) continue;
    if (!std::all_of(fm.valid[r].begin(), fm.valid[r].end(), [](uint8_t v) { return v != 0; }))
      continue;
    pool.rows.push_back(fm.values[r]);
    pool.labels.push_back(row_labels[r] == 1 ? 1 : 0);
    pool.subject.push_back(subject_index);
  }
}

double feature_auc(std::span<const double> values, std::span<const uint8_t> labels) {
  if (values.size() != labels.size()) throw ValidationError("feature_auc: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (uint8_t l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("feature_auc: both classes must be present");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Rank-sum with midranks for ties: AUC = (R+ - n+(n+ + 1)/2) / (n+ n-).
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::string> select_features(const LabeledEpochs& data, double auc_threshold) {
  std::vector<int> subjects;
  for (int s : data.subject)
    if (std::find(subjects.begin(), subjects.end(), s) == subjects.end()) subjects.push_back(s);
  if (subjects.size() < 2)
    throw ValidationError("select_features: need at least 2 subjects");
  std::sort(subjects.begin(), subjects.end());

  std::vector<std::string> selected;
  for (std::size_t f = 0; f < data.feature_names.size(); ++f) {
    std::vector<double> per_subject;
    for (int s : subjects) {
      std::vector<double> vals;
      std::vector<uint8_t> labs;
      for (std::size_t r = 0; r < data.rows.size(); ++r) {
        if (data.subject[r] != s) continue;
        vals.push_back(data.rows[r][f]);
        labs.push_back(data.labels[r]);
      }
      const bool has_pos = std::find(labs.begin(), labs.end(), uint8_t{1}) != labs.end();
      const bool has_neg = std::find(labs.begin(), labs.end(), uint8_t{0}) != labs.end();
      if (!has_pos || !has_neg) continue;  // subject contributes no AUC
      const double auc = feature_auc(vals, labs);
      per_subject.push_back(std::max(auc, 1.0 - auc));
    }
    if (per_subject.empty()) continue;
    std::sort(per_subject.begin(), per_subject.end());
    const std::size_t n = per_subject.size();
    const double median = (n % 2 == 1)
                              ? per_subject[n / 2]
                              : 0.5 * (per_subject[n / 2 - 1] + per_subject[n / 2]);
    if (median > auc_threshold) selected.push_back(data.feature_names[f]);
  }
  if (selected.empty())
    throw ValidationError("no feature exceeded the AUC threshold " +
                          std::to_string(auc_threshold) + "; review the threshold or the data");
  return selected;
}

std::vector<double> class_balance_weights(std::span<const uint8_t> labels) {
  std::size_t n_pos = 0;
  for (uint8_t l : labels) n_pos += l ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("class_balance_weights: both classes must be present");
  const double n = static_cast<double>(labels.size());
  std::vector<double> weights(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    weights[i] = labels[i] ? n / (2.0 * static_cast<double>(n_pos))
                           : n / (2.0 * static_cast<double>(n_neg));
  return weights;
}

double svm_objective(const std::vector<std::vector<double>>& rows,
                     std::span<const uint8_t> labels, std::span<const double> weights,
                     double bias, double c, std::span<const double> instance_weights) {
  double reg = 0.5 * bias * bias;
  for (double w : weights) reg += 0.5 * w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double f = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) f += weights[j] * rows[i][j];
    const double y = labels[i] ? 1.0 : -1.0;
    hinge += instance_weights[i] * std::max(0.0, 1.0 - y * f);
  }
  return reg + c * hinge;
}

LinearModel train_linear_svm(const LabeledEpochs& data,
                             const std::vector<std::string>& selected, double c) {
  if (data.rows.empty()) throw ValidationError("train_linear_svm: no rows");
  {
    bool has_pos = false, has_neg = false;
    for (uint8_t l : data.labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
      throw ValidationError("train_linear_svm: both classes must be present");
  }
  if (!(c > 0.0)) throw ValidationError("train_linear_svm: C must be > 0");

  // Column means / stds over the training rows.
  std::vector<std::size_t> cols;
  for (const auto& name : selected) {
    auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
    if (it == data.feature_names.end())
      throw ValidationError("selected feature '" + name + "' missing from the pool");
    cols.push_back(static_cast<std::size_t>(it - data.feature_names.begin()));
  }

  const std::size_t n = data.rows.size();
  std::vector<double> means(cols.size(), 0.0), stds(cols.size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double sum = 0.0;
    for (const auto& row : data.rows) sum += row[cols[j]];
    means[j] = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const auto& row : data.rows) {
      const double d = row[cols[j]] - means[j];
      sq += d * d;
    }
    stds[j] = std::sqrt(sq / static_cast<double>(n));
  }

  // Drop features that collapse to a constant after standardization.
  std::vector<std::string> kept_names;
  std::vector<std::size_t> kept_cols;
  std::vector<double> kept_means, kept_stds;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (stds[j] > 0.0) {
      kept_names.push_back(selected[j]);
      kept_cols.push_back(cols[j]);
      kept_means.push_back(means[j]);
      kept_stds.push_back(stds[j]);
    } else {
      std::fprintf(stderr, "warning: dropping zero-variance feature '%s'\n", selected[j].c_str());
    }
  }
  if (kept_cols.empty()) throw ValidationError("all selected features are zero-variance");

  // Standardized rows with the bias carried as a trailing constant feature.
  const std::size_t dim = kept_cols.size() + 1;
  std::vector<std::vector<double>> z(n, std::vector<double>(dim, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kept_cols.size(); ++j)
      z[i][j] = (data.rows[i][kept_cols[j]] - kept_means[j]) / kept_stds[j];
  }

  const auto balance = class_balance_weights(data.labels);

  // Dual coordinate descent (cyclic, deterministic). Box constraint per row
  // is C * instance_weight.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(dim, 0.0);
  std::vector<double> qdiag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (double v : z[i]) q += v * v;
    qdiag[i] = q;
  }

  const int max_passes = 1000;
  const double tol = 1e-7;
  for (int pass = 0; pass < max_passes; ++pass) {
    double max_violation = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = data.labels[i] ? 1.0 : -1.0;
      const double cap = c * balance[i];
      double g = 0.0;
      for (std::size_t j = 0; j < dim; ++j) g += w[j] * z[i][j];
      g = y * g - 1.0;

      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= cap) pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg == 0.0) continue;

      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qdiag[i], 0.0, cap);
      const double delta = (alpha[i] - old) * y;
      if (delta != 0.0) {
        for (std::size_t j = 0; j < dim; ++j) w[j] += delta * z[i][j];
      }
    }
    if (max_violation < tol) break;
  }

  LinearModel model;
  model.selected_features = kept_names;
  model.means = kept_means;
  model.stds = kept_stds;
  model.weights.assign(w.begin(), w.end() - 1);
  model.bias = w.back();
  return model;
}

std::vector<double> grid_scores(const LinearModel& model, const FeatureMatrix& fm,
                                std::vector<uint8_t>* row_valid) {
  std::vector<std::size_t> cols;
  cols.reserve(model.selected_features.size());
  for (const auto& name : model.selected_features) cols.push_back(fm.column_index(name));

  std::vector<double> scores(fm.rows(), 0.0);
  if (row_valid) row_valid->assign(fm.rows(), 1);
  std::vector<double> zrow(cols.size());
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    bool ok = true;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (!fm.valid[r][cols[j]]) ok = false;
      zrow[j] = (fm.values[r][cols[j]] - model.means[j]) / model.stds[j];
    }
    scores[r] = model.score_row(zrow);
    if (row_valid) (*row_valid)[r] = ok ? 1 : 0;
  }
  return scores;
}

ScoreTrace decision_score(const LinearModel& model, const FeatureMatrix& fm,
                          std::size_t n_samples, double fs_out) {
  std::vector<uint8_t> row_valid;
  std::vector<double> scores = grid_scores(model, fm, &row_valid);
  if (scores.empty()) throw ValidationError("decision_score: empty feature matrix");

  // Fill invalid rows from the nearest valid row (flagged in the trace).
  std::vector<double> filled = scores;
  {
    std::vector<long> nearest(scores.size(), -1);
    long last = -1;
    for (std::size_t r = 0; r < scores.size(); ++r) {
      if (row_valid[r]) last = static_cast<long>(r);
      nearest[r] = last;
    }
    long next = -1;
    for (std::size_t ri = scores.size(); ri-- > 0;) {
      if (row_valid[ri]) next = static_cast<long>(ri);
      if (nearest[ri] < 0) {
        nearest[ri] = next;
      } else if (next >= 0) {
        const double d_prev = fm.epoch_centers_s[ri] - fm.epoch_centers_s[nearest[ri]];
        const double d_next = fm.epoch_centers_s[next] - fm.epoch_centers_s[ri];
        if (d_next < d_prev) nearest[ri] = next;
      }
      if (nearest[ri] >= 0) filled[ri] = scores[nearest[ri]];
    }
    const bool any_valid = std::any_of(row_valid.begin(), row_valid.end(),
                                       [](uint8_t v) { return v != 0; });
    if (!any_valid) {
      std::fill(filled.begin(), filled.end(), model.bias);
    }
  }

  // Zero-order hold: each sample takes the score of the nearest epoch center.
  ScoreTrace trace;
  trace.fs = fs_out;
  trace.values.resize(n_samples);
  trace.valid.resize(n_samples);
  const double c0 = fm.epoch_centers_s.front();
  const double step = fm.epoch_centers_s.size() > 1
                          ? fm.epoch_centers_s[1] - fm.epoch_centers_s[0]
                          : 1.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / fs_out;
    long k = std::lround((t - c0) / step);
    k = std::clamp<long>(k, 0, static_cast<long>(scores.size()) - 1);
    trace.values[i] = filled[static_cast<std::size_t>(k)];
    trace.valid[i] = row_valid[static_cast<std::size_t>(k)];
  }
  return trace;
}

namespace {

std::string join_space(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += items[i];
  }
  return out;
}

std::string join_doubles(const std::vector<double>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += format_double(items[i]);
  }
  return out;
}

std::vector<std::string> split_space(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split_space(s)) {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw ParseError(where + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void save_model(const LinearModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "tadet_model_version=" << model.version << "\n";
  out << "bands=" << join_space(model.bands) << "\n";
  out << "orientation=" << model.orientation << "\n";
  out << "selected_features=" << join_space(model.selected_features) << "\n";
  out << "means=" << join_doubles(model.means) << "\n";
  out << "stds=" << join_doubles(model.stds) << "\n";
  out << "weights=" << join_doubles(model.weights) << "\n";
  out << "bias=" << format_double(model.bias) << "\n";
  out << "training_metadata=" << model.training_metadata << "\n";
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  std::map<std::string, std::string> kv;
  std::string line;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path + ": expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
    order.push_back(line.substr(0, eq));
  }
  for (const char* field :
       {"tadet_model_version", "bands", "orientation", "selected_features", "means", "stds",
        "weights", "bias", "training_metadata"}) {
    if (!kv.count(field)) throw ParseError(path + ": missing model field '" + field + "'");
  }

  LinearModel model;
  model.version = static_cast<int>(std::stol(kv["tadet_model_version"]));
  if (model.version != 1)
    throw ParseError(path + ": unsupported model version " + kv["tadet_model_version"]);
  model.bands = split_space(kv["bands"]);
  model.orientation = kv["orientation"];
  model.selected_features = split_space(kv["selected_features"]);
  model.means = parse_doubles(kv["means"], path);
  model.stds = parse_doubles(kv["stds"], path);
  model.weights = parse_doubles(kv["weights"], path);
  const auto bias = parse_doubles(kv["bias"], path);
  if (bias.size() != 1) throw ParseError(path + ": bias must be a single number");
  model.bias = bias[0];
  model.training_metadata = kv["training_metadata"];

  const std::size_t k = model.selected_features.size();
  if (model.means.size() != k || model.stds.size() != k || model.weights.size() != k)
    throw ParseError(path + ": selected_features/means/stds/weights lengths disagree");
  for (double s : model.stds)
    if (!(s > 0.0)) throw ParseError(path + ": stds must be positive");
  return model;
}

}  // namespace tadet
