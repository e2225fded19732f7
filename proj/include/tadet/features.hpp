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

#ifndef TADET_FEATURES_HPP
#define TADET_FEATURES_HPP

#include <span>
#include <string>
#include <vector>

#include "tadet/filters.hpp"
#include "tadet/recording.hpp"

namespace tadet {

// Epoching scheme: short epochs with 75% overlap. Time-domain features use
// 1-second epochs, spectral features 2-second epochs; both are laid out on
// the common 1-second grid (0.25 s step).
struct EpochGrid {
  double epoch_s = 1.0;
  double overlap = 0.75;  // fraction, in [0, 1)
};

struct Slice {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t length() const { return end - begin; }
};

// Consecutive windows advancing by epoch_length * (1 - overlap) samples;
// windows that would run past the end are dropped.
std::vector<Slice> epoch_slices(std::size_t n_samples, double fs, const EpochGrid& grid);

// One feature sampled on an epoch grid.
struct FeatureSeries {
  std::vector<double> values;
  std::vector<uint8_t> valid;
  std::vector<double> centers_s;
};

// Median of the squared analytic-signal magnitude |x + jH[x]|^2 per 1-second
// epoch, in uV^2. The analytic signal is taken over the whole channel before
// epoching. Invalid samples are excluded from the median; an epoch with no
// valid samples is invalid.
FeatureSeries envelope_feature(std::span<const double> x_band, std::span<const uint8_t> valid,
                               double fs);

// Higuchi fractal dimension per 1-second epoch on the broadband signal:
// minus the slope of the least-squares line through (log k, log L(k)),
// k = 1..k_max, clamped into [1, 2]. Epochs containing invalid samples, or
// with zero curve length (constant signal), are invalid.
FeatureSeries higuchi_fd(std::span<const double> x_broad, std::span<const uint8_t> valid,
                         double fs, std::size_t k_max = 8);

// Curve length at scale k from 1-based anchor m (the building block of the
// fractal dimension estimate); exposed for verification.
double higuchi_curve_length(std::span<const double> x, std::size_t m, std::size_t k);

// Relative spectral power of the band per 2-second epoch: Hamming-windowed
// DFT power in the band divided by total power over 0.5-30 Hz. Boundary bins
// belong to the lower band; the 0.5 Hz edge itself belongs to the lowest
// band. Invalid when the epoch has invalid samples or zero total power.
FeatureSeries relative_spectral_power(std::span<const double> x, std::span<const uint8_t> valid,
                                      double fs, const BandSpec& band);

// r^2 of a least-squares line through (log f, log |X|^2) over the band's
// bins, per 2-second epoch. Invalid when fewer than 3 bins fall in the band,
// any bin power is non-positive, or the log-spectrum has zero variance.
FeatureSeries spectral_fit_r2(std::span<const double> x, std::span<const uint8_t> valid,
                              double fs, const BandSpec& band);

// Median instantaneous frequency per 2-second epoch. The per-sample IF is
// the central finite difference of the analytic phase, folded into [0, 2pi)
// and scaled by fs / (4 pi). Samples with near-zero analytic amplitude at
// either neighbor are excluded; an epoch with no usable samples is invalid.
FeatureSeries instantaneous_frequency(std::span<const double> x_band,
                                      std::span<const uint8_t> valid, double fs);

// Frequency-weighted energy, per sample:
//   G(n) = 1/4 [x^2(n+1) + x^2(n-1) + h^2(n+1) + h^2(n-1)]
//        - 1/2 [x(n+1) x(n-1) + h(n+1) h(n-1)]
// with h the Hilbert transform of x; endpoints replicate their neighbor.
// Tiny negative rounding residue is clamped to zero; anything below
// -1e-6 * max indicates a numeric fault and throws.
std::vector<double> envelope_derivative_operator(std::span<const double> x);

// Per-epoch feature layout for one channel.
struct FeatureMatrix {
  std::string channel;
  std::vector<std::string> feature_names;  // <family>__<band>
  std::vector<double> epoch_centers_s;
  std::vector<std::vector<double>> values;  // [row][column]
  std::vector<std::vector<uint8_t>> valid;  // same shape

  std::size_t rows() const { return values.size(); }
  std::size_t cols() const { return feature_names.size(); }
  std::size_t column_index(const std::string& name) const;  // throws ValidationError
};

// The 18-column candidate set per channel: envelope and relative power and
// spectral fit and instantaneous frequency over the four bands, plus fractal
// dimension (0.5-30 Hz) and the envelope-derivative energy (0.5-10 Hz).
// 2-second-epoch features are assigned to the nearest 1-second-grid centers
// (ties toward the earlier epoch). Requires >= 2 s of signal at 64 Hz-style
// rates.
std::vector<FeatureMatrix> build_feature_matrix(const Recording& rec,
                                                const std::vector<BandSpec>& bands);

// CSV export: header epoch_center_s,<name>,... plus a parallel 0/1 validity
// file at "<path>.valid.csv".
void write_feature_csv(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix read_feature_csv(const std::string& path);

}  // namespace tadet

#endif  // TADET_FEATURES_HPP
