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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tadet/errors.hpp"
#include "tadet/preprocess.hpp"
#include "test_util.hpp"

using namespace tadet;

TEST_CASE("artifact rejection") {
  SUBCASE("threshold 1500 marks the documented pattern") {
    const Recording rec = Recording::make({"a"}, 256.0, {{100.0, 1600.0, -2000.0, 50.0}});
    const Recording out = reject_artifacts(rec, 1500.0);
    CHECK(out.validity[0] == std::vector<uint8_t>{1, 0, 0, 1});
    CHECK(out.samples[0][1] == 1600.0);  // amplitude preserved for audit
  }
  SUBCASE("all-zero channel keeps a clean mask") {
    const Recording rec = Recording::make({"a"}, 256.0, {std::vector<double>(16, 0.0)});
    const Recording out = reject_artifacts(rec, 1500.0);
    for (uint8_t v : out.validity[0]) CHECK(v == 1);
  }
  SUBCASE("threshold 0 violates the precondition") {
    const Recording rec = Recording::make({"a"}, 256.0, {{1.0}});
    CHECK_THROWS_AS(reject_artifacts(rec, 0.0), ValidationError);
  }
  SUBCASE("idempotent") {
    std::mt19937_64 rng(5);
    auto x = testutil::randn(rng, 200, 800.0);
    const Recording rec = Recording::make({"a"}, 256.0, {x});
    const Recording once = reject_artifacts(rec, 1000.0);
    const Recording twice = reject_artifacts(once, 1000.0);
    CHECK(once.validity == twice.validity);
    CHECK(once.samples == twice.samples);
  }
}

TEST_CASE("fir low-pass + downsample") {
  SUBCASE("length arithmetic: 2560 @256 -> 640 @64") {
    const Recording rec =
        Recording::make({"a"}, 256.0, {std::vector<double>(2560, 1.0)});
    const Recording out = fir_lowpass_downsample(rec, 30.0, 4001, 64.0);
    CHECK(out.sample_count() == 640);
    CHECK(out.sample_rate == 64.0);
  }

  SUBCASE("10 Hz tone passes within 1% of unity gain") {
    const std::size_t n = 256 * 20;
    const Recording rec = Recording::make({"a"}, 256.0, {testutil::tone(n, 256.0, 10.0, 1.0)});
    const Recording out = fir_lowpass_downsample(rec, 30.0, 4001, 64.0);
    // Compare against the directly resampled analytic expression, interior.
    double max_err = 0.0;
    for (std::size_t i = 64; i + 64 < out.sample_count(); ++i) {
      const double expect =
          std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / 64.0);
      max_err = std::max(max_err, std::abs(out.samples[0][i] - expect));
    }
    CHECK(max_err < 0.01);
  }

  SUBCASE("45 Hz tone lands in the stopband at the designed attenuation") {
    const std::size_t n = 256 * 60;
    const auto x = testutil::tone(n, 256.0, 45.0, 1.0);
    const Recording rec = Recording::make({"a"}, 256.0, {x});
    const Recording out = fir_lowpass_downsample(rec, 30.0, 4001, 64.0);
    // The 4001-tap filter spans 2000 input samples (500 output samples) of
    // boundary effects on each side; measure well inside.
    const std::size_t margin = 600;
    const double out_rms = testutil::rms(out.samples[0], margin, out.sample_count() - margin);
    const double in_rms = 1.0 / std::sqrt(2.0);
    CHECK(out_rms / in_rms < 0.01);

    // The measured rejection should match the designed |H(45 Hz)| within
    // 1 dB. 45 Hz aliases to 19 Hz at 64 Hz, so the designed gain at 45 Hz
    // is what survives.
    const auto taps = design_fir_lowpass_hamming(4001, 30.0, 256.0);
    const double designed = std::abs(fir_response_at(taps, 45.0, 256.0));
    const double measured = out_rms / in_rms;
    CHECK(std::abs(20.0 * std::log10(measured / designed)) < 1.0);
  }

  SUBCASE("duration preserved within one output sample") {
    const Recording rec = Recording::make({"a"}, 256.0, {std::vector<double>(2503, 0.5)});
    const Recording out = fir_lowpass_downsample(rec, 30.0, 4001, 64.0);
    CHECK(std::abs(out.duration_s() - rec.duration_s()) <= 1.0 / 64.0);
  }

  SUBCASE("non-integer decimation rejected") {
    const Recording rec = Recording::make({"a"}, 250.0, {std::vector<double>(2500, 0.0)});
    CHECK_THROWS_AS(fir_lowpass_downsample(rec, 30.0, 4001, 64.0), ValidationError);
  }

  SUBCASE("cutoff above the target Nyquist rejected") {
    const Recording rec = Recording::make({"a"}, 256.0, {std::vector<double>(2560, 0.0)});
    CHECK_THROWS_AS(fir_lowpass_downsample(rec, 40.0, 4001, 64.0), ValidationError);
  }

  SUBCASE("invalid samples taint the filter support and decimation windows") {
    std::vector<double> x(10240, 0.0);
    Recording rec = Recording::make({"a"}, 256.0, {x});
    rec.validity[0][5120] = 0;
    const Recording out = fir_lowpass_downsample(rec, 30.0, 4001, 64.0);
    // Output m is tainted when its decimation window [4m, 4m+3], widened by
    // the FIR half-support 2000, touches input 5120: m in [780, 1780].
    CHECK(out.validity[0][779] == 1);
    CHECK(out.validity[0][780] == 0);
    CHECK(out.validity[0][1280] == 0);
    CHECK(out.validity[0][1780] == 0);
    CHECK(out.validity[0][1781] == 1);
  }
}

TEST_CASE("zero-phase band filtering") {
  const double fs = 64.0;
  const BandSpec low_band{"0.5-4", 0.5, 4.0};

  SUBCASE("2 Hz tone through 0.5-4: zero lag at the cross-correlation peak") {
    const std::size_t n = 4096;
    const auto x = testutil::tone(n, fs, 2.0, 1.0);
    const auto y = butter_bandpass_zerophase(x, low_band, fs);
    const std::size_t margin = 1500;
    double best = -1e300;
    int best_lag = -99;
    for (int lag = -8; lag <= 8; ++lag) {
      double acc = 0.0;
      for (std::size_t i = margin; i + margin < n; ++i)
        acc += y[i] * x[static_cast<std::size_t>(static_cast<long>(i) + lag)];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }

  SUBCASE("20 Hz tone through 0.5-4 attenuated per the squared magnitude") {
    const std::size_t n = 8192;
    const auto x = testutil::tone(n, fs, 20.0, 1.0);
    const auto y = butter_bandpass_zerophase(x, low_band, fs);
    const SosFilter f = make_band_filter(low_band, fs);
    const double designed = std::norm(f.response_at(20.0, fs));  // |H|^2 for two passes
    const std::size_t margin = settle_margin(f);
    const double ratio = testutil::rms(y, margin, n - margin) / testutil::rms(x, margin, n - margin);
    CHECK(ratio < 0.02);
    CHECK(std::abs(20.0 * std::log10(ratio / designed)) < 1.0);
  }

  SUBCASE("impulse response is even about the impulse (interior)") {
    const SosFilter f = make_band_filter(low_band, fs);
    const std::size_t margin = settle_margin(f);
    const std::size_t n = 2 * margin + 2001;
    std::vector<double> x(n, 0.0);
    const std::size_t c = n / 2;
    x[c] = 1.0;
    const auto y = filtfilt(f, x);
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    double asym = 0.0;
    for (std::size_t k = 1; k < 1000; ++k) asym = std::max(asym, std::abs(y[c + k] - y[c - k]));
    CHECK(asym / peak < 1e-9);
  }

  SUBCASE("time-reversal symmetry at 1e-9 (interior)") {
    std::mt19937_64 rng(17);
    for (const auto& band : classifier_bands()) {
      const SosFilter f = make_band_filter(band, fs);
      const std::size_t margin = settle_margin(f);
      const std::size_t n = 2 * margin + 4000;
      const auto x = testutil::randn(rng, n);
      std::vector<double> xr(x.rbegin(), x.rend());
      const auto y = butter_bandpass_zerophase(x, band, fs);
      const auto yr = butter_bandpass_zerophase(xr, band, fs);
      double scale = 0.0;
      for (double v : y) scale = std::max(scale, std::abs(v));
      double err = 0.0;
      for (std::size_t i = margin; i + margin < n; ++i)
        err = std::max(err, std::abs(yr[n - 1 - i] - y[i]));
      CHECK(err / scale < 1e-9);
    }
  }

  SUBCASE("linearity within 1e-9") {
    std::mt19937_64 rng(23);
    const std::size_t n = 2048;
    const auto x = testutil::randn(rng, n);
    const auto y = testutil::randn(rng, n);
    std::vector<double> combo(n);
    for (std::size_t i = 0; i < n; ++i) combo[i] = 2.5 * x[i] - 0.75 * y[i];
    const auto fx = butter_bandpass_zerophase(x, low_band, fs);
    const auto fy = butter_bandpass_zerophase(y, low_band, fs);
    const auto fc = butter_bandpass_zerophase(combo, low_band, fs);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale = std::max(scale, std::abs(fc[i]));
      err = std::max(err, std::abs(fc[i] - (2.5 * fx[i] - 0.75 * fy[i])));
    }
    CHECK(err / scale < 1e-9);
  }

  SUBCASE("time invariance: shifting input shifts output (interior)") {
    std::mt19937_64 rng(29);
    const SosFilter f = make_band_filter(low_band, fs);
    const std::size_t margin = settle_margin(f);
    const std::size_t n = 2 * margin + 3000;
    const std::size_t shift = 160;
    auto x = testutil::randn(rng, n);
    std::vector<double> xs(n, 0.0);
    for (std::size_t i = shift; i < n; ++i) xs[i] = x[i - shift];
    const auto y = filtfilt(f, x);
    const auto ys = filtfilt(f, xs);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = margin + shift; i + margin + shift < n; ++i) {
      scale = std::max(scale, std::abs(y[i]));
      err = std::max(err, std::abs(ys[i + shift] - y[i]));
    }
    CHECK(err / scale < 1e-6);
  }

  SUBCASE("band outside Nyquist rejected") {
    std::vector<double> x(512, 0.0);
    CHECK_THROWS_AS(butter_bandpass_zerophase(x, BandSpec{"bad", 10.0, 40.0}, fs),
                    ValidationError);
  }

  SUBCASE("too-short input rejected") {
    const auto x = testutil::tone(50, fs, 2.0, 1.0);
    CHECK_THROWS_AS(butter_bandpass_zerophase(x, low_band, fs), ValidationError);
  }
}

TEST_CASE("13-30 Hz band at fs=64 is realized as a high-pass at 13 Hz") {
  const SosFilter f = make_band_filter(BandSpec{"13-30", 13.0, 30.0}, 64.0);
  CHECK(f.realized_order == 5);  // high-pass, not a 10-pole band-pass
  CHECK(std::abs(f.response_at(20.0, 64.0)) > 0.98);
  CHECK(std::abs(f.response_at(31.0, 64.0)) > 0.9);
  CHECK(std::abs(f.response_at(5.0, 64.0)) < 0.02);
  // At a higher rate the same band is an ordinary band-pass.
  const SosFilter bp = make_band_filter(BandSpec{"13-30", 13.0, 30.0}, 256.0);
  CHECK(bp.realized_order == 10);
  CHECK(std::abs(bp.response_at(50.0, 256.0)) < 0.05);
}

TEST_CASE("band decomposition") {
  SUBCASE("4 bands x 4 channels -> 16 filtered series") {
    std::mt19937_64 rng(31);
    std::vector<std::vector<double>> data;
    for (int c = 0; c < 4; ++c) data.push_back(testutil::randn(rng, 512));
    const Recording rec =
        Recording::make({"F3-T3", "F4-T4", "T4-Cz", "Cz-T3"}, 64.0, data);
    const auto bands = band_decompose(rec, classifier_bands());
    CHECK(bands.size() == 4);
    std::size_t series = 0;
    for (const auto& b : bands) series += b.channel_count();
    CHECK(series == 16);
  }

  SUBCASE("zero input stays zero in every band") {
    const Recording rec = Recording::make({"a"}, 64.0, {std::vector<double>(512, 0.0)});
    for (const auto& b : band_decompose(rec, classifier_bands()))
      for (double v : b.samples[0]) CHECK(v == 0.0);
  }

  SUBCASE("masks propagate unchanged") {
    Recording rec = Recording::make({"a"}, 64.0, {std::vector<double>(512, 1.0)});
    rec.validity[0][100] = 0;
    const auto bands = band_decompose(rec, classifier_bands());
    CHECK(bands[0].validity[0][100] == 0);
    CHECK(bands[3].validity[0][99] == 1);
  }
}

TEST_CASE("filter coefficient export round-trips exactly") {
  const auto dir = testutil::scratch_dir("sos_csv");
  const SosFilter f = make_band_filter(BandSpec{"4-7", 4.0, 7.0}, 64.0);
  write_sos_csv(f, dir + "/f.csv");
  const SosFilter back = read_sos_csv(dir + "/f.csv");
  REQUIRE(back.sections.size() == f.sections.size());
  CHECK(back.realized_order == f.realized_order);
  for (std::size_t i = 0; i < f.sections.size(); ++i) {
    CHECK(back.sections[i].b0 == f.sections[i].b0);
    CHECK(back.sections[i].b1 == f.sections[i].b1);
    CHECK(back.sections[i].b2 == f.sections[i].b2);
    CHECK(back.sections[i].a1 == f.sections[i].a1);
    CHECK(back.sections[i].a2 == f.sections[i].a2);
  }
  // The round-tripped filter reproduces the designed response.
  CHECK(std::abs(std::abs(back.response_at(5.5, 64.0)) - std::abs(f.response_at(5.5, 64.0))) ==
        0.0);
}
