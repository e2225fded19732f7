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

#ifndef TADET_FILTERS_HPP
#define TADET_FILTERS_HPP

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace tadet {

// A frequency band. For band filtering, 0 < low < high <= Nyquist.
struct BandSpec {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// Second-order section, a0 normalized to 1. First-order sections use
// b2 = a2 = 0.
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Cascade of second-order sections.
struct SosFilter {
  std::vector<Biquad> sections;
  int realized_order = 0;  // total pole count of the digital filter

  // Complex frequency response of a single (forward) pass at freq_hz.
  std::complex<double> response_at(double freq_hz, double fs) const;
};

// Butterworth designs via the bilinear transform with frequency pre-warping.
// Throw ValidationError for corners outside (0, Nyquist) and NumericError
// when the resulting poles are not strictly inside the unit circle.
SosFilter design_butterworth_lowpass(int order, double cutoff_hz, double fs);
SosFilter design_butterworth_highpass(int order, double cutoff_hz, double fs);
SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

// Single causal pass through the cascade, zero initial conditions.
std::vector<double> sos_filter_forward(const SosFilter& f, std::span<const double> x);

// Samples after which the slowest pole has decayed below `attenuation`.
// Edge transients of filtfilt are negligible beyond this distance from
// either end.
std::size_t settle_margin(const SosFilter& f, double attenuation = 1e-12);

// Forward-backward (zero-phase) filtering. Each end is padded with
// 3 * realized_order samples by odd reflection before filtering and trimmed
// afterwards, so the effective magnitude response is |H|^2 with zero phase.
// Requires x.size() > 6 * realized_order.
std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x);

// Windowed-sinc (Hamming) linear-phase FIR low-pass. length must be odd.
// Taps normalized to unity DC gain.
std::vector<double> design_fir_lowpass_hamming(std::size_t length, double cutoff_hz, double fs);

// Complex frequency response of FIR taps at freq_hz.
std::complex<double> fir_response_at(std::span<const double> taps, double freq_hz, double fs);

// Coefficient export for golden tests: one "b0,b1,b2,a1,a2" row per section.
void write_sos_csv(const SosFilter& f, const std::string& path);
SosFilter read_sos_csv(const std::string& path);

// Group-delay-compensated FIR filtering: output[n] lines up with input[n].
// Ends are padded by (taps-1)/2 samples via odd reflection. Uses FFT
// convolution for large inputs, direct convolution otherwise; both paths are
// deterministic for a given input size.
std::vector<double> fir_filter_aligned(std::span<const double> x, std::span<const double> taps);

}  // namespace tadet

#endif  // TADET_FILTERS_HPP
