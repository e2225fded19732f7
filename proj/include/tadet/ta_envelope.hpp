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

#ifndef TADET_TA_ENVELOPE_HPP
#define TADET_TA_ENVELOPE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tadet/classifier.hpp"
#include "tadet/recording.hpp"

namespace tadet {

// Centered moving median; the window shrinks at the edges so the output has
// the input's length. The window is 2*round(window_s*fs/2)+1 samples wide.
std::vector<double> moving_median(std::span<const double> x, double window_s, double fs);

// Per-sample arithmetic mean across channels. Samples invalid in a channel
// are left out of that sample's mean; a sample invalid everywhere is invalid
// in the result (value 0).
ScoreTrace average_channels(const std::vector<ScoreTrace>& traces);

// Replaces invalid samples with the nearest valid value (ties toward the
// earlier sample). A trace with no valid samples is returned unchanged.
ScoreTrace fill_gaps_nearest(const ScoreTrace& trace);

// Strict interior local maxima; a flat run bounded by strictly lower samples
// counts once, at the plateau midpoint.
std::vector<std::size_t> find_local_maxima(std::span<const double> x);

// Greedy minimum-separation thinning: maxima are accepted in descending
// height (earlier sample wins ties) and any maximum within min_sep of an
// accepted one is suppressed. Returns accepted indices in time order.
std::vector<std::size_t> select_peaks_min_separation(std::span<const double> x,
                                                     std::span<const std::size_t> maxima,
                                                     double min_sep_s, double fs);

// Smooth upper contour of the score: surviving local maxima joined by a
// natural cubic spline, held constant beyond the outermost peaks. With a
// single peak the envelope is flat at its value; with no interior maximum
// the trace itself is returned. Optionally evaluated only every `stride`
// samples (intermediate samples linearly skipped in the output when
// stride > 1 the output has ceil(n/stride) entries).
std::vector<double> peak_spline_envelope(std::span<const double> x, double min_sep_s, double fs,
                                         std::size_t stride = 1);

// One training recording for the separation sweep: the filtered channel-mean
// score plus per-sample TA truth (1 TA, 0 non-TA, -1 unlabeled).
struct TaTrainingTrace {
  std::vector<double> score;
  std::vector<int8_t> ta_label;
};

// Sweep grid 2.5, 5.0, ..., 50.0 s.
std::vector<double> min_separation_grid();

// Grid value maximizing the mean per-recording AUC of envelope vs TA labels;
// ties go to the smaller separation. Envelope and labels are compared on a
// quarter-second evaluation stride for speed. Recordings missing a class are
// skipped; throws when nothing is usable.
double optimize_min_separation(const std::vector<TaTrainingTrace>& recordings,
                               std::span<const double> grid, double fs);

struct TaEpochDecision {
  double start_s = 0.0;
  int truth = -1;  // 1 full TA, 0 full non-TA, -1 mixed/unlabeled (excluded)
  double mean_envelope = 0.0;
};

struct TaDecision {
  std::vector<double> envelope;
  std::vector<uint8_t> binary_ta;  // envelope > threshold
  std::vector<TaEpochDecision> epochs;
};

// Thresholds the envelope per sample and applies the epoch protocol:
// consecutive epoch_minutes windows get a truth label only when fully TA or
// fully non-TA per the annotations, and carry the mean envelope as their
// score.
TaDecision decide_ta(std::span<const double> envelope, double fs, double threshold,
                     double epoch_minutes, const AnnotationTrack& ann);

// Per-sample TA truth from annotations: 1 inside TA, 0 inside nonTA,
// -1 uncovered.
std::vector<int8_t> sample_ta_labels(const AnnotationTrack& ann, std::size_t n_samples, double fs);

}  // namespace tadet

#endif  // TADET_TA_ENVELOPE_HPP
