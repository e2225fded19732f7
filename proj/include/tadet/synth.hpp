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

#ifndef TADET_SYNTH_HPP
#define TADET_SYNTH_HPP

#include <cstdint>
#include <utility>

#include "tadet/recording.hpp"

namespace tadet {

// Synthetic neonatal-EEG generator. Trace-alternant stretches alternate
// bursts (high peak-to-peak) and inter-bursts (low peak-to-peak) a few
// seconds each; non-TA stretches carry continuous mid-amplitude activity
// without the alternation. Carriers are 0.5-12 Hz colored noise with smooth
// quarter-second level ramps between segments.
struct SynthConfig {
  uint64_t seed = 1;
  double duration_s = 1800.0;
  double fs = 256.0;
  double burst_amp_lo_uv = 50.0;    // peak-to-peak
  double burst_amp_hi_uv = 150.0;
  double interburst_amp_lo_uv = 25.0;
  double interburst_amp_hi_uv = 50.0;
  double nonta_amp_lo_uv = 40.0;
  double nonta_amp_hi_uv = 80.0;
  double segment_lo_s = 3.0;   // burst / inter-burst durations
  double segment_hi_s = 10.0;
  double ta_fraction = 0.5;
  double noise_floor_uv = 1.0;  // RMS of the additive floor
  std::size_t n_channels = 4;

  void validate() const;  // throws ValidationError
};

// Fully reproducible from cfg.seed. Channel labels follow the standard
// bipolar montage names. Annotations are global: alternating burst /
// interburst entries covering every TA interval, nonTA entries elsewhere.
std::pair<Recording, AnnotationTrack> generate_recording(const SynthConfig& cfg);

}  // namespace tadet

#endif  // TADET_SYNTH_HPP
