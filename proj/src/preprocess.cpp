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

#include "tadet/preprocess.hpp"

#include <cmath>
#include <cstdlib>

#include "tadet/errors.hpp"

namespace tadet {

const std::vector<BandSpec>& classifier_bands() {
  static const std::vector<BandSpec> bands = {
      {"0.5-4", 0.5, 4.0},
      {"4-7", 4.0, 7.0},
      {"7-13", 7.0, 13.0},
      {"13-30", 13.0, 30.0},
  };
  return bands;
}

BandSpec broadband() { return {"0.5-30", 0.5, 30.0}; }

BandSpec edo_band() { return {"0.5-10", 0.5, 10.0}; }

Recording reject_artifacts(const Recording& rec, double threshold_uv) {
  if (!(threshold_uv > 0.0)) throw ValidationError("artifact threshold must be > 0");
  rec.validate();
  Recording out = rec;
  for (std::size_t c = 0; c < out.channel_count(); ++c) {
    for (std::size_t n = 0; n < out.samples[c].size(); ++n) {
      if (std::abs(out.samples[c][n]) > threshold_uv) out.validity[c][n] = 0;
    }
  }
  return out;
}

Recording fir_lowpass_downsample(const Recording& rec, double cutoff_hz,
                                 std::size_t fir_length, double target_rate_hz) {
  rec.validate();
  if (!(target_rate_hz > 0.0)) throw ValidationError("target rate must be > 0");
  const double ratio = rec.sample_rate / target_rate_hz;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
    throw ValidationError("target rate must divide the recording sample rate (" +
                          std::to_string(rec.sample_rate) + " -> " +
                          std::to_string(target_rate_hz) + ")");
  if (!(cutoff_hz < target_rate_hz / 2.0))
    throw ValidationError("cutoff must be below the target Nyquist");

  const auto taps = design_fir_lowpass_hamming(fir_length, cutoff_hz, rec.sample_rate);
  const std::size_t mid = (fir_length - 1) / 2;
  const std::size_t n = rec.sample_count();
  const std::size_t out_n = (n + factor - 1) / factor;  // ceil(n / factor)

  Recording out;
  out.channel_labels = rec.channel_labels;
  out.sample_rate = target_rate_hz;
  out.samples.resize(rec.channel_count());
  out.validity.resize(rec.channel_count());

  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto filtered = fir_filter_aligned(rec.samples[c], taps);

    // Widen invalidity by the FIR support: output sample n is tainted when
    // any input in [n - mid, n + mid] is invalid. Prefix sums of the mask
    // make the window query O(1).
    std::vector<std::size_t> invalid_prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
      invalid_prefix[i + 1] = invalid_prefix[i] + (rec.validity[c][i] ? 0 : 1);
    auto window_has_invalid = [&](std::size_t lo, std::size_t hi_inclusive) {
      const std::size_t hi = std::min(hi_inclusive, n - 1);
      return invalid_prefix[hi + 1] - invalid_prefix[lo] > 0;
    };

    out.samples[c].resize(out_n);
    out.validity[c].assign(out_n, 1);
    for (std::size_t m = 0; m < out_n; ++m) {
      const std::size_t src = m * factor;
      out.samples[c][m] = filtered[src];
      // Decimation window [m*factor, (m+1)*factor) AND'ed, each member
      // widened by the filter support.
      bool ok = true;
      for (std::size_t i = src; i < std::min(src + factor, n) && ok; ++i) {
        const std::size_t lo = i > mid ? i - mid : 0;
        if (window_has_invalid(lo, i + mid)) ok = false;
      }
      out.validity[c][m] = ok ? 1 : 0;
    }
  }
  return out;
}

SosFilter make_band_filter(const BandSpec& band, double fs, int order) {
  if (!(band.low_hz > 0.0) || !(band.low_hz < band.high_hz))
    throw ValidationError("band '" + band.name + "' must satisfy 0 < low < high");
  const double nyquist = fs / 2.0;
  if (!(band.high_hz <= nyquist))
    throw ValidationError("band '" + band.name + "' exceeds Nyquist at fs=" + std::to_string(fs));
  if (band.high_hz >= 0.9 * nyquist)
    return design_butterworth_highpass(order, band.low_hz, fs);
  return design_butterworth_bandpass(order, band.low_hz, band.high_hz, fs);
}

std::vector<double> butter_bandpass_zerophase(std::span<const double> x, const BandSpec& band,
                                              double fs) {
  const SosFilter f = make_band_filter(band, fs);
  if (x.size() <= static_cast<std::size_t>(6 * f.realized_order))
    throw ValidationError("signal too short for zero-phase band filtering (need > " +
                          std::to_string(6 * f.realized_order) + " samples)");
  return filtfilt(f, x);
}

std::vector<Recording> band_decompose(const Recording& rec, const std::vector<BandSpec>& bands) {
  rec.validate();
  std::vector<Recording> out;
  out.reserve(bands.size());
  for (const BandSpec& band : bands) {
    Recording r;
    r.channel_labels = rec.channel_labels;
    r.sample_rate = rec.sample_rate;
    r.validity = rec.validity;  // masks propagate unchanged
    r.samples.reserve(rec.channel_count());
    for (const auto& ch : rec.samples)
      r.samples.push_back(butter_bandpass_zerophase(ch, band, rec.sample_rate));
    out.push_back(std::move(r));
  }
  return out;
}

Recording preprocess_recording(const Recording& rec, const PreprocessParams& params) {
  Recording rejected = reject_artifacts(rec, params.artifact_threshold_uv);
  return fir_lowpass_downsample(rejected, params.fir_cutoff_hz, params.fir_length,
                                params.target_rate_hz);
}

}  // namespace tadet
