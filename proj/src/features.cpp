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

#include "tadet/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "tadet/errors.hpp"
#include "tadet/fft.hpp"
#include "tadet/preprocess.hpp"
#include "tadet/signal_io.hpp"

namespace tadet {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpectralRangeLow = 0.5;   // Hz, lower edge of the analysed range
constexpr double kSpectralRangeHigh = 30.0;  // Hz

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Median over valid samples of data[slice]; false when none are valid.
bool epoch_median(std::span<const double> data, std::span<const uint8_t> valid, Slice s,
                  double* out) {
  std::vector<double> vals;
  vals.reserve(s.length());
  for (std::size_t i = s.begin; i < s.end; ++i) {
    if (valid[i]) vals.push_back(data[i]);
  }
  if (vals.empty()) return false;
  *out = median_of(vals);
  return true;
}

bool slice_fully_valid(std::span<const uint8_t> valid, Slice s) {
  for (std::size_t i = s.begin; i < s.end; ++i)
    if (!valid[i]) return false;
  return true;
}

std::vector<double> epoch_centers(const std::vector<Slice>& slices, double fs) {
  std::vector<double> centers;
  centers.reserve(slices.size());
  for (const Slice& s : slices)
    centers.push_back((static_cast<double>(s.begin) + static_cast<double>(s.length()) / 2.0) / fs);
  return centers;
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

// Band membership for DFT bins: (low, high], except that the lower edge of
// the full analysed range belongs to the lowest band so the four bands tile
// 0.5-30 Hz exactly.
bool bin_in_band(double f, const BandSpec& band) {
  const double eps = 1e-9;
  const bool include_low = std::abs(band.low_hz - kSpectralRangeLow) < eps;
  const bool above_low = include_low ? (f >= band.low_hz - eps) : (f > band.low_hz + eps);
  return above_low && f <= band.high_hz + eps;
}

bool bin_in_total_range(double f) {
  const double eps = 1e-9;
  return f >= kSpectralRangeLow - eps && f <= kSpectralRangeHigh + eps;
}

// Least-squares slope/intercept of y on x.
void fit_line(const std::vector<double>& x, const std::vector<double>& y, double* slope,
              double* intercept) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  *slope = (n * sxy - sx * sy) / denom;
  *intercept = (sy - *slope * sx) / n;
}

const EpochGrid kTimeGrid{1.0, 0.75};
const EpochGrid kSpectralGrid{2.0, 0.75};

}  // namespace

std::vector<Slice> epoch_slices(std::size_t n_samples, double fs, const EpochGrid& grid) {
  if (!(fs > 0.0)) throw ValidationError("epoch_slices: fs must be > 0");
  if (!(grid.overlap >= 0.0 && grid.overlap < 1.0))
    throw ValidationError("epoch_slices: overlap must be in [0, 1)");
  const auto len = static_cast<std::size_t>(std::llround(grid.epoch_s * fs));
  if (len < 2) throw ValidationError("epoch_slices: epoch shorter than 2 samples");
  const auto step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(len) * (1.0 - grid.overlap))));
  std::vector<Slice> slices;
  for (std::size_t start = 0; start + len <= n_samples; start += step)
    slices.push_back({start, start + len});
  return slices;
}

FeatureSeries envelope_feature(std::span<const double> x_band, std::span<const uint8_t> valid,
                               double fs) {
  const auto z = analytic_signal(x_band);
  std::vector<double> envelope(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) envelope[i] = std::norm(z[i]);

  const auto slices = epoch_slices(x_band.size(), fs, kTimeGrid);
  FeatureSeries out;
  out.centers_s = epoch_centers(slices, fs);
  out.values.resize(slices.size(), 0.0);
  out.valid.resize(slices.size(), 0);
  for (std::size_t e = 0; e < slices.size(); ++e)
    out.valid[e] = epoch_median(envelope, valid, slices[e], &out.values[e]) ? 1 : 0;
  return out;
}

double higuchi_curve_length(std::span<const double> x, std::size_t m, std::size_t k) {
  const std::size_t n = x.size();
  if (m < 1 || m > k || k < 1 || n < m + k)
    throw ValidationError("higuchi_curve_length: need 1 <= m <= k and at least m+k samples");
  const std::size_t steps = (n - m) / k;
  double sum = 0.0;
  for (std::size_t i = 1; i <= steps; ++i)
    sum += std::abs(x[m - 1 + i * k] - x[m - 1 + (i - 1) * k]);
  const double norm = static_cast<double>(n - 1) /
                      (static_cast<double>(steps) * static_cast<double>(k) * static_cast<double>(k));
  return norm * sum;
}

FeatureSeries higuchi_fd(std::span<const double> x_broad, std::span<const uint8_t> valid,
                         double fs, std::size_t k_max) {
  const auto slices = epoch_slices(x_broad.size(), fs, kTimeGrid);
  if (!slices.empty() && slices[0].length() < 2 * k_max)
    throw ValidationError("higuchi_fd: epoch length must be >= 2 * k_max");

  FeatureSeries out;
  out.centers_s = epoch_centers(slices, fs);
  out.values.resize(slices.size(), 0.0);
  out.valid.resize(slices.size(), 0);

  std::vector<double> log_k(k_max), log_l(k_max);
  for (std::size_t e = 0; e < slices.size(); ++e) {
    const Slice s = slices[e];
    if (!slice_fully_valid(valid, s)) continue;
    std::span<const double> seg = x_broad.subspan(s.begin, s.length());
    bool degenerate = false;
    for (std::size_t k = 1; k <= k_max; ++k) {
      double lk = 0.0;
      for (std::size_t m = 1; m <= k; ++m) lk += higuchi_curve_length(seg, m, k);
      lk /= static_cast<double>(k);
      if (!(lk > 0.0)) {
        degenerate = true;  // constant segment, zero curve length
        break;
      }
      log_k[k - 1] = std::log(static_cast<double>(k));
      log_l[k - 1] = std::log(lk);
    }
    if (degenerate) continue;
    double slope, intercept;
    fit_line(log_k, log_l, &slope, &intercept);
    out.values[e] = std::clamp(-slope, 1.0, 2.0);
    out.valid[e] = 1;
  }
  return out;
}

FeatureSeries relative_spectral_power(std::span<const double> x, std::span<const uint8_t> valid,
                                      double fs, const BandSpec& band) {
  const auto slices = epoch_slices(x.size(), fs, kSpectralGrid);
  FeatureSeries out;
  out.centers_s = epoch_centers(slices, fs);
  out.values.resize(slices.size(), 0.0);
  out.valid.resize(slices.size(), 0);
  if (slices.empty()) return out;

  const std::size_t nfft = slices[0].length();
  const auto window = hamming_window(nfft);
  std::vector<double> buf(nfft);
  for (std::size_t e = 0; e < slices.size(); ++e) {
    const Slice s = slices[e];
    if (!slice_fully_valid(valid, s)) continue;
    for (std::size_t i = 0; i < nfft; ++i) buf[i] = x[s.begin + i] * window[i];
    const auto power = power_spectrum_onesided(buf);
    double total = 0.0, in_band = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
      if (bin_in_total_range(f)) total += power[k];
      if (bin_in_band(f, band)) in_band += power[k];
    }
    if (!(total > 0.0)) continue;
    out.values[e] = in_band / total;
    out.valid[e] = 1;
  }
  return out;
}

FeatureSeries spectral_fit_r2(std::span<const double> x, std::span<const uint8_t> valid, double fs,
                              const BandSpec& band) {
  const auto slices = epoch_slices(x.size(), fs, kSpectralGrid);
  FeatureSeries out;
  out.centers_s = epoch_centers(slices, fs);
  out.values.resize(slices.size(), 0.0);
  out.valid.resize(slices.size(), 0);
  if (slices.empty()) return out;

  const std::size_t nfft = slices[0].length();
  const auto window = hamming_window(nfft);
  std::vector<double> buf(nfft);
  for (std::size_t e = 0; e < slices.size(); ++e) {
    const Slice s = slices[e];
    if (!slice_fully_valid(valid, s)) continue;
    for (std::size_t i = 0; i < nfft; ++i) buf[i] = x[s.begin + i] * window[i];
    const auto power = power_spectrum_onesided(buf);

    std::vector<double> log_f, log_p;
    bool usable = true;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
      if (!bin_in_band(f, band)) continue;
      if (!(power[k] > 0.0)) {
        usable = false;
        break;
      }
      log_f.push_back(std::log(f));
      log_p.push_back(std::log(power[k]));
    }
    if (!usable || log_f.size() < 3) continue;

    double slope, intercept;
    fit_line(log_f, log_p, &slope, &intercept);
    double mean = 0.0;
    for (double y : log_p) mean += y;
    mean /= static_cast<double>(log_p.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < log_p.size(); ++i) {
      const double fit = intercept + slope * log_f[i];
      ss_res += (log_p[i] - fit) * (log_p[i] - fit);
      ss_tot += (log_p[i] - mean) * (log_p[i] - mean);
    }
    // Flat log-spectrum: the denominator carries only rounding noise.
    const double flat_floor =
        1e-15 * static_cast<double>(log_p.size()) * (1.0 + mean * mean);
    if (!(ss_tot > flat_floor)) continue;
    out.values[e] = std::min(1.0, 1.0 - ss_res / ss_tot);
    out.valid[e] = 1;
  }
  return out;
}

FeatureSeries instantaneous_frequency(std::span<const double> x_band,
                                      std::span<const uint8_t> valid, double fs) {
  const auto z = analytic_signal(x_band);
  const std::size_t n = z.size();
  std::vector<double> amplitude(n), phase(n);
  double max_amp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    amplitude[i] = std::abs(z[i]);
    phase[i] = std::arg(z[i]);
    max_amp = std::max(max_amp, amplitude[i]);
  }
  const double amp_floor = 1e-12 * max_amp;

  // Per-sample IF with the central difference; usable[i] marks samples whose
  // neighbors carry defined phase and valid amplitudes.
  std::vector<double> inst_freq(n, 0.0);
  std::vector<uint8_t> usable(n, 0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!valid[i - 1] || !valid[i] || !valid[i + 1]) continue;
    if (amplitude[i - 1] <= amp_floor || amplitude[i + 1] <= amp_floor) continue;
    double dphi = std::fmod(phase[i + 1] - phase[i - 1], 2.0 * kPi);
    if (dphi < 0.0) dphi += 2.0 * kPi;
    inst_freq[i] = fs / (4.0 * kPi) * dphi;
    usable[i] = 1;
  }

  const auto slices = epoch_slices(n, fs, kSpectralGrid);
  FeatureSeries out;
  out.centers_s = epoch_centers(slices, fs);
  out.values.resize(slices.size(), 0.0);
  out.valid.resize(slices.size(), 0);
  for (std::size_t e = 0; e < slices.size(); ++e)
    out.valid[e] = epoch_median(inst_freq, usable, slices[e], &out.values[e]) ? 1 : 0;
  return out;
}

std::vector<double> envelope_derivative_operator(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("envelope_derivative_operator: need at least 3 samples");
  const auto h = hilbert_transform(x);
  std::vector<double> gamma(n, 0.0);
  double max_gamma = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double xs = x[i + 1] * x[i + 1] + x[i - 1] * x[i - 1];
    const double hs = h[i + 1] * h[i + 1] + h[i - 1] * h[i - 1];
    const double cross = x[i + 1] * x[i - 1] + h[i + 1] * h[i - 1];
    gamma[i] = 0.25 * (xs + hs) - 0.5 * cross;
    max_gamma = std::max(max_gamma, std::abs(gamma[i]));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (gamma[i] < -1e-6 * max_gamma)
      throw NumericError("envelope_derivative_operator: negative energy beyond rounding noise");
    if (gamma[i] < 0.0) gamma[i] = 0.0;
  }
  gamma[0] = gamma[1];
  gamma[n - 1] = gamma[n - 2];
  return gamma;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return i;
  throw ValidationError("feature '" + name + "' not present in the feature matrix");
}

namespace {

// Nearest 2-s epoch for 1-s grid row k, ties toward the earlier epoch. The
// 1-s grid centers sit at 0.5 + 0.25 k and the 2-s centers at 1.0 + 0.5 m, so
// the nearest index reduces to floor((k - 2) / 2) clamped into range.
std::size_t spectral_row_for(std::size_t k, std::size_t m_count) {
  const long long idx = (static_cast<long long>(k) - 2) / 2 -
                        ((static_cast<long long>(k) - 2) % 2 < 0 ? 1 : 0);
  const long long clamped = std::clamp<long long>(idx, 0, static_cast<long long>(m_count) - 1);
  return static_cast<std::size_t>(clamped);
}

void place_series(FeatureMatrix& fm, std::size_t col, const FeatureSeries& series,
                  bool spectral_grid) {
  for (std::size_t k = 0; k < fm.rows(); ++k) {
    const std::size_t src = spectral_grid ? spectral_row_for(k, series.values.size()) : k;
    fm.values[k][col] = series.values[src];
    fm.valid[k][col] = series.valid[src];
  }
}

}  // namespace

std::vector<FeatureMatrix> build_feature_matrix(const Recording& rec,
                                                const std::vector<BandSpec>& bands) {
  rec.validate();
  const double fs = rec.sample_rate;
  const std::size_t n = rec.sample_count();
  if (static_cast<double>(n) < 2.0 * fs)
    throw ValidationError("recording shorter than the longest (2 s) epoch");

  const BandSpec broad = broadband();
  const BandSpec edo = edo_band();

  std::vector<std::string> names;
  for (const auto& b : bands) names.push_back("env__" + b.name);
  for (const auto& b : bands) names.push_back("rpsd__" + b.name);
  for (const auto& b : bands) names.push_back("r2__" + b.name);
  for (const auto& b : bands) names.push_back("if__" + b.name);
  names.push_back("fd__" + broad.name);
  names.push_back("edo__" + edo.name);

  std::vector<FeatureMatrix> result;
  result.reserve(rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    std::span<const double> x(rec.samples[c]);
    std::span<const uint8_t> mask(rec.validity[c]);

    const auto grid = epoch_slices(n, fs, kTimeGrid);
    FeatureMatrix fm;
    fm.channel = rec.channel_labels[c];
    fm.feature_names = names;
    fm.epoch_centers_s = epoch_centers(grid, fs);
    fm.values.assign(grid.size(), std::vector<double>(names.size(), 0.0));
    fm.valid.assign(grid.size(), std::vector<uint8_t>(names.size(), 0));

    std::size_t col = 0;
    for (const auto& band : bands) {
      const auto xb = butter_bandpass_zerophase(x, band, fs);
      place_series(fm, col++, envelope_feature(xb, mask, fs), false);
    }
    for (const auto& band : bands)
      place_series(fm, col++, relative_spectral_power(x, mask, fs, band), true);
    for (const auto& band : bands)
      place_series(fm, col++, spectral_fit_r2(x, mask, fs, band), true);
    for (const auto& band : bands) {
      const auto xb = butter_bandpass_zerophase(x, band, fs);
      place_series(fm, col++, instantaneous_frequency(xb, mask, fs), true);
    }
    {
      const auto xb = butter_bandpass_zerophase(x, broad, fs);
      place_series(fm, col++, higuchi_fd(xb, mask, fs), false);
    }
    {
      const auto xb = butter_bandpass_zerophase(x, edo, fs);
      const auto gamma = envelope_derivative_operator(xb);
      FeatureSeries series;
      series.centers_s = fm.epoch_centers_s;
      series.values.resize(grid.size(), 0.0);
      series.valid.resize(grid.size(), 0);
      for (std::size_t e = 0; e < grid.size(); ++e)
        series.valid[e] = epoch_median(gamma, mask, grid[e], &series.values[e]) ? 1 : 0;
      place_series(fm, col++, series, false);
    }
    result.push_back(std::move(fm));
  }
  return result;
}

void write_feature_csv(const FeatureMatrix& fm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  std::ofstream vout(path + ".valid.csv", std::ios::binary);
  if (!vout) throw ParseError("cannot open '" + path + ".valid.csv' for writing");
  out << "epoch_center_s";
  vout << "epoch_center_s";
  for (const auto& name : fm.feature_names) {
    out << "," << name;
    vout << "," << name;
  }
  out << "\n";
  vout << "\n";
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    out << format_double(fm.epoch_centers_s[r]);
    vout << format_double(fm.epoch_centers_s[r]);
    for (std::size_t c = 0; c < fm.cols(); ++c) {
      out << "," << format_double(fm.values[r][c]);
      vout << "," << (fm.valid[r][c] ? 1 : 0);
    }
    out << "\n";
    vout << "\n";
  }
}

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");

  FeatureMatrix fm;
  {
    std::string cell;
    std::stringstream header(line);
    bool first = true;
    while (std::getline(header, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      if (first) {
        if (cell != "epoch_center_s")
          throw ParseError(path + ": expected first column epoch_center_s");
        first = false;
      } else {
        fm.feature_names.push_back(cell);
      }
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      double v = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size())
        throw ParseError(path + ": line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != fm.feature_names.size() + 1)
      throw ParseError(path + ": line " + std::to_string(line_no) + ": wrong field count");
    fm.epoch_centers_s.push_back(row[0]);
    fm.values.emplace_back(row.begin() + 1, row.end());
  }
  fm.valid.assign(fm.rows(), std::vector<uint8_t>(fm.cols(), 1));

  const std::string vpath = path + ".valid.csv";
  if (std::filesystem::exists(vpath)) {
    std::ifstream vin(vpath, std::ios::binary);
    std::getline(vin, line);  // header
    std::size_t r = 0;
    while (std::getline(vin, line) && r < fm.rows()) {
      if (line.empty() || line == "\r") continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t idx = 0;
      while (std::getline(ss, cell, ',')) {
        if (idx > 0 && idx - 1 < fm.cols()) fm.valid[r][idx - 1] = (cell != "0") ? 1 : 0;
        ++idx;
      }
      ++r;
    }
  }
  return fm;
}

}  // namespace tadet
