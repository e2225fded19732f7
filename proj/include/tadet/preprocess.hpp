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

#ifndef TADET_PREPROCESS_HPP
#define TADET_PREPROCESS_HPP

#include <span>
#include <vector>

#include "tadet/filters.hpp"
#include "tadet/recording.hpp"

namespace tadet {

// Frequency bands used by the burst/inter-burst feature set.
const std::vector<BandSpec>& classifier_bands();  // 0.5-4, 4-7, 7-13, 13-30
BandSpec broadband();                             // 0.5-30, fractal dimension input
BandSpec edo_band();                              // 0.5-10, envelope-derivative input

struct PreprocessParams {
  double artifact_threshold_uv = 1500.0;
  double fir_cutoff_hz = 30.0;
  std::size_t fir_length = 4001;
  double target_rate_hz = 64.0;
};

// Marks samples with |x| > threshold_uv invalid. Amplitudes are preserved for
// audit. Total and idempotent; threshold must be positive.
Recording reject_artifacts(const Recording& rec, double threshold_uv);

// Anti-alias FIR low-pass (windowed sinc, Hamming) followed by decimation to
// target_rate_hz. Output is group-delay compensated. An output sample is
// invalid when any input sample inside the FIR support window is invalid, or
// when any sample of its decimation window is invalid.
Recording fir_lowpass_downsample(const Recording& rec, double cutoff_hz,
                                 std::size_t fir_length, double target_rate_hz);

// Zero-phase (forward-backward) 5th-order Butterworth band filter for one
// channel. Bands whose upper edge sits at or beyond 90% of Nyquist are
// realized as a high-pass at the lower edge; the signal entering this stage
// is already low-passed at 30 Hz, and a band edge that close to Nyquist makes
// the band-pass design ill-conditioned.
std::vector<double> butter_bandpass_zerophase(std::span<const double> x, const BandSpec& band,
                                              double fs);

// The filter butter_bandpass_zerophase would apply for this band.
SosFilter make_band_filter(const BandSpec& band, double fs, int order = 5);

// Applies butter_bandpass_zerophase per channel per band. Validity masks are
// copied through unchanged.
std::vector<Recording> band_decompose(const Recording& rec, const std::vector<BandSpec>& bands);

// reject + FIR low-pass + decimate with the standard parameters.
Recording preprocess_recording(const Recording& rec, const PreprocessParams& params = {});

}  // namespace tadet

#endif  // TADET_PREPROCESS_HPP
