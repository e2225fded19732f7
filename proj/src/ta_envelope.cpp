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

#include "tadet/ta_envelope.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tadet/errors.hpp"

namespace tadet {
namespace {

// Order-statistics window for the sliding median: two balanced multisets,
// |low| == |high| or |low| == |high| + 1.
class MedianWindow {
 public:
  void insert(double v) {
    if (low_.empty() || v <= *low_.rbegin()) low_.insert(v);
    else high_.insert(v);
    rebalance();
  }

  void erase(double v) {
    auto it = low_.find(v);
    if (it != low_.end()) low_.erase(it);
    else high_.erase(high_.find(v));
    rebalance();
  }

  double median() const {
    const std::size_t n = low_.size() + high_.size();
    if (n % 2 == 1) return *low_.rbegin();
    return 0.5 * (*low_.rbegin() + *high_.begin());
  }

 private:
  void rebalance() {
    while (low_.size() > high_.size() + 1) {
      auto it = std::prev(low_.end());
      high_.insert(*it);
      low_.erase(it);
    }
    while (high_.size() > low_.size()) {
      auto it = high_.begin();
      low_.insert(*it);
      high_.erase(it);
    }
  }

  std::multiset<double> low_, high_;
};

// Natural cubic spline through strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> t, std::vector<double> v)
      : t_(std::move(t)), v_(std::move(v)), m_(t_.size(), 0.0) {
    const std::size_t k = t_.size();
    if (k < 2) throw ValidationError("spline needs at least 2 knots");
    if (k == 2) return;  // second derivatives stay zero: straight line

    // Thomas solve of the tridiagonal system for interior second derivatives.
    std::vector<double> diag(k, 2.0), off_lo(k, 0.0), off_hi(k, 0.0), rhs(k, 0.0);
    std::vector<double> h(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) h[i] = t_[i + 1] - t_[i];
    for (std::size_t i = 1; i + 1 < k; ++i) {
      off_lo[i] = h[i - 1] / (h[i - 1] + h[i]);
      off_hi[i] = h[i] / (h[i - 1] + h[i]);
      rhs[i] = 6.0 / (h[i - 1] + h[i]) *
               ((v_[i + 1] - v_[i]) / h[i] - (v_[i] - v_[i - 1]) / h[i - 1]);
    }
    // Natural boundary: m_[0] = m_[k-1] = 0; eliminate forward.
    for (std::size_t i = 2; i + 1 < k; ++i) {
      const double factor = off_lo[i] / diag[i - 1];
      diag[i] -= factor * off_hi[i - 1];
      rhs[i] -= factor * rhs[i - 1];
    }
    for (std::size_t i = k - 2; i >= 1; --i) {
      double upper = (i + 2 < k) ? off_hi[i] * m_[i + 1] : 0.0;
      m_[i] = (rhs[i] - upper) / diag[i];
      if (i == 1) break;
    }
  }

  // Evaluates at time x, holding the end values outside the knot range.
  double operator()(double x) const {
    if (x <= t_.front()) return v_.front();
    if (x >= t_.back()) return v_.back();
    // Monotone queries can reuse a cached interval.
    while (seg_ + 2 < t_.size() && x > t_[seg_ + 1]) ++seg_;
    while (seg_ > 0 && x < t_[seg_]) --seg_;
    const std::size_t i = seg_;
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - x) / h;
    const double b = (x - t_[i]) / h;
    return a * v_[i] + b * v_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
  }

 private:
  std::vector<double> t_, v_, m_;
  mutable std::size_t seg_ = 0;
};

std::vector<double> envelope_from_peaks(std::span<const double> x,
                                        const std::vector<std::size_t>& peaks, double fs,
                                        std::size_t stride) {
  const std::size_t out_n = (x.size() + stride - 1) / stride;
  std::vector<double> env(out_n);
  if (peaks.empty()) {
    for (std::size_t i = 0; i < out_n; ++i) env[i] = x[i * stride];
    return env;
  }
  if (peaks.size() == 1) {
    std::fill(env.begin(), env.end(), x[peaks[0]]);
    return env;
  }
  std::vector<double> t(peaks.size()), v(peaks.size());
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    t[i] = static_cast<double>(peaks[i]) / fs;
    v[i] = x[peaks[i]];
  }
  const CubicSpline spline(std::move(t), std::move(v));
  for (std::size_t i = 0; i < out_n; ++i)
    env[i] = spline(static_cast<double>(i * stride) / fs);
  return env;
}

}  // namespace

std::vector<double> moving_median(std::span<const double> x, double window_s, double fs) {
  const auto half = static_cast<std::size_t>(std::llround(window_s * fs / 2.0));
  if (2 * half + 1 < 3) throw ValidationError("moving_median: window must span >= 3 samples");
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;

  MedianWindow window;
  std::size_t lo = 0, hi = 0;  // current window is [lo, hi)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t want_lo = i > half ? i - half : 0;
    const std::size_t want_hi = std::min(n, i + half + 1);
    while (hi < want_hi) window.insert(x[hi++]);
    while (lo < want_lo) window.erase(x[lo++]);
    out[i] = window.median();
  }
  return out;
}

ScoreTrace average_channels(const std::vector<ScoreTrace>& traces) {
  if (traces.empty()) throw ValidationError("average_channels: need at least one channel");
  const std::size_t n = traces[0].values.size();
  for (const auto& t : traces) {
    if (t.values.size() != n || t.valid.size() != n)
      throw ValidationError("average_channels: traces must have equal length");
  }
  ScoreTrace out;
  out.fs = traces[0].fs;
  out.values.resize(n, 0.0);
  out.valid.resize(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : traces) {
      if (!t.valid[i]) continue;
      sum += t.values[i];
      ++count;
    }
    if (count > 0) {
      out.values[i] = sum / static_cast<double>(count);
      out.valid[i] = 1;
    }
  }
  return out;
}

ScoreTrace fill_gaps_nearest(const ScoreTrace& trace) {
  const std::size_t n = trace.values.size();
  ScoreTrace out = trace;
  std::vector<long> nearest(n, -1);
  long last = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (trace.valid[i]) last = static_cast<long>(i);
    nearest[i] = last;
  }
  long next = -1;
  for (std::size_t i = n; i-- > 0;) {
    if (trace.valid[i]) next = static_cast<long>(i);
    if (nearest[i] < 0) {
      nearest[i] = next;
    } else if (next >= 0) {
      const long d_prev = static_cast<long>(i) - nearest[i];
      const long d_next = next - static_cast<long>(i);
      if (d_next < d_prev) nearest[i] = next;
    }
    if (nearest[i] >= 0) out.values[i] = trace.values[nearest[i]];
  }
  return out;
}

std::vector<std::size_t> find_local_maxima(std::span<const double> x) {
  std::vector<std::size_t> maxima;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] <= x[i - 1]) {
      ++i;
      continue;
    }
    // Rising edge at i; extend across any plateau.
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n && x[j + 1] < x[i]) maxima.push_back((i + j) / 2);
    i = j + 1;
  }
  return maxima;
}

std::vector<std::size_t> select_peaks_min_separation(std::span<const double> x,
                                                     std::span<const std::size_t> maxima,
                                                     double min_sep_s, double fs) {
  const double min_sep = min_sep_s * fs;  // samples
  std::vector<std::size_t> order(maxima.begin(), maxima.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] > x[b];
    return a < b;
  });

  std::set<std::size_t> accepted;
  for (std::size_t idx : order) {
    auto it = accepted.lower_bound(idx);
    bool blocked = false;
    if (it != accepted.end() &&
        static_cast<double>(*it - idx) < min_sep) blocked = true;
    if (!blocked && it != accepted.begin()) {
      const std::size_t prev = *std::prev(it);
      if (static_cast<double>(idx - prev) < min_sep) blocked = true;
    }
    if (!blocked) accepted.insert(idx);
  }
  return {accepted.begin(), accepted.end()};
}

std::vector<double> peak_spline_envelope(std::span<const double> x, double min_sep_s, double fs,
                                         std::size_t stride) {
  if (x.size() < 3) throw ValidationError("peak_spline_envelope: need at least 3 samples");
  if (!(min_sep_s * fs >= 2.0))
    throw ValidationError("peak_spline_envelope: min separation must be >= 2 sample periods");
  if (stride == 0) throw ValidationError("peak_spline_envelope: stride must be >= 1");
  const auto maxima = find_local_maxima(x);
  const auto peaks = select_peaks_min_separation(x, maxima, min_sep_s, fs);
  return envelope_from_peaks(x, peaks, fs, stride);
}

std::vector<double> min_separation_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(2.5 * k);
  return grid;
}

namespace {

// AUC helper tolerant of unlabeled samples; returns false when a class is
// missing.
bool auc_of(std::span<const double> scores, std::span<const int8_t> labels, std::size_t stride,
            double* out) {
  std::vector<double> v;
  std::vector<uint8_t> l;
  for (std::size_t i = 0, j = 0; i < labels.size(); i += stride, ++j) {
    if (labels[i] < 0) continue;
    v.push_back(scores[j]);
    l.push_back(labels[i] == 1 ? 1 : 0);
  }
  const bool has_pos = std::find(l.begin(), l.end(), uint8_t{1}) != l.end();
  const bool has_neg = std::find(l.begin(), l.end(), uint8_t{0}) != l.end();
  if (!has_pos || !has_neg) return false;
  *out = feature_auc(v, l);
  return true;
}

}  // namespace

double optimize_min_separation(const std::vector<TaTrainingTrace>& recordings,
                               std::span<const double> grid, double fs) {
  if (recordings.empty()) throw ValidationError("optimize_min_separation: empty training set");
  if (grid.empty()) throw ValidationError("optimize_min_separation: empty candidate grid");
  constexpr std::size_t kStride = 16;  // quarter-second evaluation at 64 Hz

  struct Prepared {
    const TaTrainingTrace* trace;
    std::vector<std::size_t> maxima;
  };
  std::vector<Prepared> prepared;
  for (const auto& rec : recordings) {
    if (rec.score.size() < 3 || rec.score.size() != rec.ta_label.size())
      throw ValidationError("optimize_min_separation: malformed training trace");
    prepared.push_back({&rec, find_local_maxima(rec.score)});
  }

  double best_sep = grid[0];
  double best_auc = -1.0;
  for (double candidate : grid) {
    double auc_sum = 0.0;
    std::size_t used = 0;
    for (const auto& p : prepared) {
      const auto peaks =
          select_peaks_min_separation(p.trace->score, p.maxima, candidate, fs);
      const auto env = envelope_from_peaks(p.trace->score, peaks, fs, kStride);
      double auc = 0.0;
      if (!auc_of(env, p.trace->ta_label, kStride, &auc)) continue;
      auc_sum += auc;
      ++used;
    }
    if (used == 0) continue;
    const double mean_auc = auc_sum / static_cast<double>(used);
    if (mean_auc > best_auc) {  // strict: ties keep the smaller separation
      best_auc = mean_auc;
      best_sep = candidate;
    }
  }
  if (best_auc < 0.0)
    throw ValidationError("optimize_min_separation: no recording had both TA and non-TA labels");
  return best_sep;
}

std::vector<int8_t> sample_ta_labels(const AnnotationTrack& ann, std::size_t n_samples,
                                     double fs) {
  std::vector<int8_t> labels(n_samples, -1);
  for (const auto& e : ann.entries) {
    int8_t value;
    if (e.label == AnnotLabel::TA) value = 1;
    else if (e.label == AnnotLabel::NonTA) value = 0;
    else continue;
    const auto begin = static_cast<std::size_t>(std::max(0.0, std::ceil(e.onset_s * fs)));
    const auto end = std::min(n_samples, static_cast<std::size_t>(std::ceil(e.end_s() * fs)));
    for (std::size_t i = begin; i < end; ++i) {
      if (static_cast<double>(i) / fs >= e.onset_s && static_cast<double>(i) / fs < e.end_s())
        labels[i] = value;
    }
  }
  return labels;
}

TaDecision decide_ta(std::span<const double> envelope, double fs, double threshold,
                     double epoch_minutes, const AnnotationTrack& ann) {
  for (double v : envelope) {
    if (!std::isfinite(v)) throw ValidationError("decide_ta: envelope must be finite");
  }
  TaDecision out;
  out.envelope.assign(envelope.begin(), envelope.end());
  out.binary_ta.resize(envelope.size());
  for (std::size_t i = 0; i < envelope.size(); ++i)
    out.binary_ta[i] = envelope[i] > threshold ? 1 : 0;

  const auto labels = sample_ta_labels(ann, envelope.size(), fs);
  const auto epoch_len = static_cast<std::size_t>(std::llround(epoch_minutes * 60.0 * fs));
  if (epoch_len == 0) throw ValidationError("decide_ta: epoch length must be positive");
  for (std::size_t start = 0; start + epoch_len <= envelope.size(); start += epoch_len) {
    TaEpochDecision epoch;
    epoch.start_s = static_cast<double>(start) / fs;
    bool all_ta = true, all_non = true;
    double sum = 0.0;
    for (std::size_t i = start; i < start + epoch_len; ++i) {
      sum += envelope[i];
      if (labels[i] != 1) all_ta = false;
      if (labels[i] != 0) all_non = false;
    }
    epoch.mean_envelope = sum / static_cast<double>(epoch_len);
    epoch.truth = all_ta ? 1 : (all_non ? 0 : -1);
    out.epochs.push_back(epoch);
  }
  return out;
}

}  // namespace tadet
