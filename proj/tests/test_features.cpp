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

#include "oracles.hpp"
#include "tadet/errors.hpp"
#include "tadet/features.hpp"
#include "tadet/preprocess.hpp"
#include "test_util.hpp"

using namespace tadet;
using testutil::rel_err;

namespace {
const EpochGrid kOneSecond{1.0, 0.75};
const EpochGrid kTwoSecond{2.0, 0.75};

std::vector<uint8_t> all_valid(std::size_t n) { return std::vector<uint8_t>(n, 1); }
}  // namespace

TEST_CASE("epoch slices") {
  CHECK(epoch_slices(640, 64.0, kOneSecond).size() == 37);
  CHECK(epoch_slices(640, 64.0, kOneSecond)[1].begin == 16);
  CHECK(epoch_slices(128, 64.0, kTwoSecond).size() == 1);
  CHECK(epoch_slices(63, 64.0, kOneSecond).empty());
  CHECK_THROWS_AS(epoch_slices(64, 64.0, EpochGrid{0.01, 0.75}), ValidationError);
}

TEST_CASE("envelope feature") {
  const double fs = 64.0;

  SUBCASE("pure tone: median envelope is the squared amplitude") {
    const auto x = testutil::tone(640, fs, 2.0, 10.0);
    const auto env = envelope_feature(x, all_valid(640), fs);
    REQUIRE(env.values.size() == 37);
    for (std::size_t e = 8; e + 8 < env.values.size(); ++e) {
      CHECK(env.valid[e] == 1);
      CHECK(std::abs(env.values[e] - 100.0) < 2.0);  // within 2%
    }
  }

  SUBCASE("zero signal gives zero") {
    const std::vector<double> x(320, 0.0);
    const auto env = envelope_feature(x, all_valid(320), fs);
    for (std::size_t e = 0; e < env.values.size(); ++e) CHECK(env.values[e] == 0.0);
  }

  SUBCASE("white noise matches the DFT-analytic oracle") {
    std::mt19937_64 rng(101);
    const auto x = testutil::randn(rng, 512);
    const auto env = envelope_feature(x, all_valid(512), fs);
    const auto z = oracle::analytic(x);
    const auto slices = epoch_slices(512, fs, kOneSecond);
    REQUIRE(env.values.size() == slices.size());
    for (std::size_t e = 0; e < slices.size(); ++e) {
      std::vector<double> mags;
      for (std::size_t i = slices[e].begin; i < slices[e].end; ++i)
        mags.push_back(std::norm(z[i]));
      CHECK(rel_err(env.values[e], oracle::median(mags)) < 1e-6);
    }
  }

  SUBCASE("fully invalid epoch is flagged") {
    const auto x = testutil::tone(192, fs, 2.0, 1.0);
    auto mask = all_valid(192);
    for (std::size_t i = 0; i < 64; ++i) mask[i] = 0;
    const auto env = envelope_feature(x, mask, fs);
    CHECK(env.valid[0] == 0);
    CHECK(env.valid.back() == 1);
  }
}

TEST_CASE("higuchi fractal dimension") {
  const double fs = 64.0;

  SUBCASE("hand-evaluated curve length for x=0..5, m=1, k=2") {
    const std::vector<double> x = {0, 1, 2, 3, 4, 5};
    CHECK(higuchi_curve_length(x, 1, 2) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(oracle::higuchi_lm(x, 1, 2) == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("straight line has dimension 1") {
    std::vector<double> x(640);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    const auto fd = higuchi_fd(x, all_valid(640), fs);
    for (std::size_t e = 0; e < fd.values.size(); ++e) {
      CHECK(fd.valid[e] == 1);
      CHECK(std::abs(fd.values[e] - 1.0) < 0.05);
    }
  }

  SUBCASE("white noise approaches dimension 2 and matches the oracle") {
    std::mt19937_64 rng(202);
    double impl_sum = 0.0;
    std::size_t count = 0;
    for (int trial = 0; trial < 16; ++trial) {
      const auto x = testutil::randn(rng, 1024);
      const auto fd = higuchi_fd(x, all_valid(1024), fs);
      const auto slices = epoch_slices(1024, fs, kOneSecond);
      for (std::size_t e = 0; e < slices.size(); ++e) {
        std::vector<double> epoch(x.begin() + slices[e].begin, x.begin() + slices[e].end);
        const double want = std::clamp(oracle::higuchi_fd(epoch, 8), 1.0, 2.0);
        CHECK(rel_err(fd.values[e], want) < 1e-3);
        impl_sum += fd.values[e];
        ++count;
      }
    }
    CHECK(count >= 968);  // 16 trials x 61 epochs in the mean below
    CHECK(std::abs(impl_sum / static_cast<double>(count) - 2.0) < 0.1);
  }

  SUBCASE("constant epoch is invalid") {
    std::vector<double> x(192, 3.25);
    const auto fd = higuchi_fd(x, all_valid(192), fs);
    for (uint8_t v : fd.valid) CHECK(v == 0);
  }
}

TEST_CASE("relative spectral power") {
  const double fs = 64.0;
  const auto& bands = classifier_bands();

  SUBCASE("pure 2 Hz tone concentrates in the lowest band") {
    const auto x = testutil::tone(1024, fs, 2.0, 20.0);
    const auto p0 = relative_spectral_power(x, all_valid(1024), fs, bands[0]);
    for (std::size_t e = 0; e < p0.values.size(); ++e) {
      CHECK(p0.valid[e] == 1);
      CHECK(p0.values[e] >= 0.95);
    }
    for (int b = 1; b < 4; ++b) {
      const auto pb = relative_spectral_power(x, all_valid(1024), fs, bands[b]);
      for (double v : pb.values) CHECK(v <= 0.05);
    }
  }

  SUBCASE("equal 2 Hz + 10 Hz tones split evenly, matching the oracle") {
    auto x = testutil::tone(1024, fs, 2.0, 10.0);
    const auto y = testutil::tone(1024, fs, 10.0, 10.0, 0.7);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    const auto p_low = relative_spectral_power(x, all_valid(1024), fs, bands[0]);
    const auto p_mid = relative_spectral_power(x, all_valid(1024), fs, bands[2]);
    const auto slices = epoch_slices(1024, fs, kTwoSecond);
    for (std::size_t e = 0; e < slices.size(); ++e) {
      CHECK(std::abs(p_low.values[e] - 0.5) < 0.05);
      CHECK(std::abs(p_mid.values[e] - 0.5) < 0.05);
      std::vector<double> epoch(x.begin() + slices[e].begin, x.begin() + slices[e].end);
      bool ok = false;
      const double want = oracle::rpsd(epoch, fs, 0.5, 4.0, true, &ok);
      REQUIRE(ok);
      CHECK(rel_err(p_low.values[e], want) < 1e-6);
    }
  }

  SUBCASE("the four bands tile 0.5-30 Hz: powers sum to 1") {
    std::mt19937_64 rng(303);
    const auto x = testutil::randn(rng, 512);
    std::vector<FeatureSeries> per_band;
    for (const auto& b : bands)
      per_band.push_back(relative_spectral_power(x, all_valid(512), fs, b));
    for (std::size_t e = 0; e < per_band[0].values.size(); ++e) {
      double sum = 0.0;
      for (const auto& p : per_band) sum += p.values[e];
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }

  SUBCASE("zero total power is invalid") {
    const std::vector<double> x(256, 0.0);
    const auto p = relative_spectral_power(x, all_valid(256), fs, bands[0]);
    for (uint8_t v : p.valid) CHECK(v == 0);
  }
}

TEST_CASE("spectral fit r^2") {
  const double fs = 64.0;
  const BandSpec band{"0.5-4", 0.5, 4.0};

  SUBCASE("exact power law in the windowed spectrum gives r^2 = 1") {
    // Build a 128-sample epoch whose Hamming-windowed DFT power is exactly
    // c*k^-2: synthesize the spectrum, invert, divide out the window.
    const std::size_t n = 128;
    std::vector<std::complex<double>> spec(n, 0.0);
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double mag = 10.0 / static_cast<double>(k);
      spec[k] = std::complex<double>(mag, 0.0);
      if (k < n / 2) spec[n - k] = std::conj(spec[k]);
    }
    const auto time_domain = oracle::idft(spec);
    const auto w = oracle::hamming(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = time_domain[i].real() / w[i];
    const auto r2 = spectral_fit_r2(x, all_valid(n), fs, band);
    REQUIRE(r2.values.size() == 1);
    CHECK(r2.valid[0] == 1);
    CHECK(std::abs(r2.values[0] - 1.0) < 1e-6);
  }

  SUBCASE("white noise matches the closed-form normal-equations oracle") {
    std::mt19937_64 rng(404);
    const auto x = testutil::randn(rng, 1024);
    const auto r2 = spectral_fit_r2(x, all_valid(1024), fs, band);
    const auto slices = epoch_slices(1024, fs, kTwoSecond);
    for (std::size_t e = 0; e < slices.size(); ++e) {
      std::vector<double> epoch(x.begin() + slices[e].begin, x.begin() + slices[e].end);
      bool ok = false;
      const double want = oracle::spectral_r2(epoch, fs, 0.5, 4.0, true, &ok);
      REQUIRE(ok);
      REQUIRE(r2.valid[e] == 1);
      CHECK(std::abs(r2.values[e] - want) < 1e-9);
    }
  }

  SUBCASE("flat log-spectrum has a degenerate denominator and is invalid") {
    const std::size_t n = 128;
    std::vector<std::complex<double>> spec(n, 0.0);
    for (std::size_t k = 1; k <= n / 2; ++k) {
      spec[k] = std::complex<double>(5.0, 0.0);  // constant magnitude
      if (k < n / 2) spec[n - k] = std::conj(spec[k]);
    }
    const auto time_domain = oracle::idft(spec);
    const auto w = oracle::hamming(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = time_domain[i].real() / w[i];
    const auto r2 = spectral_fit_r2(x, all_valid(n), fs, band);
    CHECK(r2.valid[0] == 0);
  }

  SUBCASE("bands with fewer than 3 bins are invalid") {
    std::mt19937_64 rng(405);
    const auto x = testutil::randn(rng, 256);
    const auto r2 = spectral_fit_r2(x, all_valid(256), fs, BandSpec{"tiny", 6.2, 6.9});
    for (uint8_t v : r2.valid) CHECK(v == 0);
  }
}

TEST_CASE("instantaneous frequency") {
  const double fs = 64.0;

  SUBCASE("10 Hz tone reads 10 Hz") {
    const auto x = testutil::tone(1024, fs, 10.0, 5.0);
    const auto f = instantaneous_frequency(x, all_valid(1024), fs);
    for (std::size_t e = 1; e + 1 < f.values.size(); ++e) {
      CHECK(f.valid[e] == 1);
      CHECK(std::abs(f.values[e] - 10.0) < 0.1);
    }
  }

  SUBCASE("5 Hz tone reads 5 Hz") {
    const auto x = testutil::tone(1024, fs, 5.0, 5.0);
    const auto f = instantaneous_frequency(x, all_valid(1024), fs);
    for (std::size_t e = 1; e + 1 < f.values.size(); ++e)
      CHECK(std::abs(f.values[e] - 5.0) < 0.1);
  }

  SUBCASE("linear chirp 8->12 Hz over one 2 s epoch reads ~10 Hz") {
    const std::size_t n = 128;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      x[i] = std::cos(2.0 * std::numbers::pi * (8.0 * t + t * t));  // f(t) = 8 + 2t
    }
    const auto f = instantaneous_frequency(x, all_valid(n), fs);
    REQUIRE(f.values.size() == 1);
    CHECK(std::abs(f.values[0] - 10.0) < 0.3);
  }

  SUBCASE("noise matches the oracle") {
    std::mt19937_64 rng(505);
    auto x = testutil::randn(rng, 512);
    const auto xb = butter_bandpass_zerophase(x, BandSpec{"4-7", 4.0, 7.0}, fs);
    const auto f = instantaneous_frequency(xb, all_valid(512), fs);
    const auto slices = epoch_slices(512, fs, kTwoSecond);
    for (std::size_t e = 0; e < slices.size(); ++e) {
      bool ok = false;
      const double want = oracle::if_median(xb, fs, static_cast<int>(slices[e].begin),
                                            static_cast<int>(slices[e].end), &ok);
      REQUIRE(ok);
      CHECK(rel_err(f.values[e], want) < 1e-6);
    }
  }
}

TEST_CASE("envelope-derivative operator") {
  const double fs = 64.0;

  SUBCASE("cosine: constant and equal to the literal transcription") {
    const std::size_t n = 256;
    std::vector<double> x(n);
    const double w = 2.0 * std::numbers::pi * 4.0 / fs;
    for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(w * static_cast<double>(i));
    const auto gamma = envelope_derivative_operator(x);
    const auto want = oracle::edo(x);
    double max_gamma = 0.0;
    for (double v : want) max_gamma = std::max(max_gamma, v);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(gamma[i] - want[i]) <= 1e-9 * max_gamma);
    // Interior values are constant near A^2 sin^2(w).
    const double expect = std::sin(w) * std::sin(w);
    for (std::size_t i = 32; i + 32 < n; ++i) CHECK(std::abs(gamma[i] - expect) < 0.02 * expect);
  }

  SUBCASE("zero signal gives zero") {
    const std::vector<double> x(64, 0.0);
    for (double v : envelope_derivative_operator(x)) CHECK(v == 0.0);
  }

  SUBCASE("doubling the amplitude quadruples the energy") {
    std::mt19937_64 rng(606);
    auto x = testutil::randn(rng, 300);
    auto x2 = x;
    for (double& v : x2) v *= 2.0;
    const auto g1 = envelope_derivative_operator(x);
    const auto g2 = envelope_derivative_operator(x2);
    double max_g = 0.0;
    for (double v : g2) max_g = std::max(max_g, v);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(g2[i] - 4.0 * g1[i]) <= 1e-9 * max_g);
  }

  SUBCASE("too-short input rejected") {
    const std::vector<double> x(2, 1.0);
    CHECK_THROWS_AS(envelope_derivative_operator(x), ValidationError);
  }
}

TEST_CASE("feature matrix assembly") {
  const double fs = 64.0;

  SUBCASE("single channel, 18 columns, common grid") {
    std::mt19937_64 rng(707);
    const Recording rec = Recording::make({"ch"}, fs, {testutil::randn(rng, 38400, 20.0)});
    const auto mats = build_feature_matrix(rec, classifier_bands());
    REQUIRE(mats.size() == 1);
    CHECK(mats[0].cols() == 18);
    CHECK(mats[0].rows() == epoch_slices(38400, fs, kOneSecond).size());
    CHECK(mats[0].feature_names[0] == "env__0.5-4");
    CHECK(mats[0].feature_names[16] == "fd__0.5-30");
    CHECK(mats[0].feature_names[17] == "edo__0.5-10");
    // Spectral columns land on the nearest 2 s center, ties to the earlier:
    // grid row 3 (center 1.25 s) takes 2 s epoch 0 (center 1.0 s).
    const auto rpsd = relative_spectral_power(rec.samples[0], rec.validity[0], fs,
                                              classifier_bands()[0]);
    CHECK(mats[0].values[3][4] == rpsd.values[0]);
    CHECK(mats[0].values[4][4] == rpsd.values[1]);
  }

  SUBCASE("all-invalid recording yields an all-false mask") {
    std::mt19937_64 rng(708);
    Recording rec = Recording::make({"ch"}, fs, {testutil::randn(rng, 512, 20.0)});
    for (auto& v : rec.validity[0]) v = 0;
    const auto mats = build_feature_matrix(rec, classifier_bands());
    for (const auto& row : mats[0].valid)
      for (uint8_t v : row) CHECK(v == 0);
  }

  SUBCASE("identical channels produce identical rows") {
    std::mt19937_64 rng(709);
    const auto x = testutil::randn(rng, 1024, 15.0);
    const Recording rec = Recording::make({"a", "b"}, fs, {x, x});
    const auto mats = build_feature_matrix(rec, classifier_bands());
    REQUIRE(mats.size() == 2);
    CHECK(mats[0].values == mats[1].values);
    CHECK(mats[0].valid == mats[1].valid);
  }

  SUBCASE("too-short recording rejected") {
    const Recording rec = Recording::make({"ch"}, fs, {std::vector<double>(100, 1.0)});
    CHECK_THROWS_AS(build_feature_matrix(rec, classifier_bands()), ValidationError);
  }
}

TEST_CASE("feature invariances") {
  const double fs = 64.0;
  std::mt19937_64 rng(808);

  SUBCASE("amplitude equivariance") {
    auto x = testutil::randn(rng, 1024, 10.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += 8.0 * std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(i) / fs);
    auto scaled = x;
    for (double& v : scaled) v *= 4.0;  // power of two keeps scaling exact
    const Recording r1 = Recording::make({"ch"}, fs, {x});
    const Recording r2 = Recording::make({"ch"}, fs, {scaled});
    const auto m1 = build_feature_matrix(r1, classifier_bands());
    const auto m2 = build_feature_matrix(r2, classifier_bands());
    for (std::size_t r = 0; r < m1[0].rows(); ++r) {
      for (std::size_t c = 0; c < 18; ++c) {
        if (!m1[0].valid[r][c]) continue;
        const std::string& name = m1[0].feature_names[c];
        const double a = m1[0].values[r][c];
        const double b = m2[0].values[r][c];
        if (name.rfind("env__", 0) == 0 || name.rfind("edo__", 0) == 0) {
          CHECK(rel_err(b, 16.0 * a) < 1e-6);  // quadratic in amplitude
        } else {
          CHECK(rel_err(b, a) < 1e-6);
        }
      }
    }
  }

  SUBCASE("shifting by a whole spectral epoch step shifts rows accordingly") {
    // The common grid steps every 16 samples but the 2-second features step
    // every 32, so the smallest shift that moves every column by whole rows
    // is 32 samples (= 2 grid rows).
    const std::size_t n = 8192, step = 32;
    const auto x = testutil::randn(rng, n, 10.0);
    std::vector<double> shifted(n);
    // shifted[i] = x[i - 32]; fresh noise enters at the front, the tail drops.
    const auto head = testutil::randn(rng, step, 10.0);
    for (std::size_t i = 0; i < step; ++i) shifted[i] = head[i];
    for (std::size_t i = step; i < n; ++i) shifted[i] = x[i - step];
    const Recording r1 = Recording::make({"ch"}, fs, {x});
    const Recording r2 = Recording::make({"ch"}, fs, {shifted});
    const auto m1 = build_feature_matrix(r1, classifier_bands());
    const auto m2 = build_feature_matrix(r2, classifier_bands());
    const std::size_t rows = m1[0].rows();
    // Middle third: far enough from both ends that filter transients have
    // settled; the DFT-Hilbert boundary leakage decays only like
    // 1/distance, so the Hilbert-based features get a loose tolerance.
    for (std::size_t r = rows / 3; r + rows / 3 < rows; ++r) {
      for (std::size_t c = 0; c < 18; ++c) {
        const std::string& name = m1[0].feature_names[c];
        const double a = m1[0].values[r][c];
        const double b = m2[0].values[r + 2][c];
        if (name.rfind("rpsd__", 0) == 0 || name.rfind("r2__", 0) == 0) {
          CHECK(a == b);  // same raw samples, same arithmetic
        } else if (name.rfind("fd__", 0) == 0) {
          CHECK(rel_err(a, b) < 1e-9);  // filtered input, transient settled
        } else {
          CHECK(rel_err(a, b) < 1e-2);  // whole-channel Hilbert leakage
        }
      }
    }
  }

  SUBCASE("determinism: identical input, identical output") {
    const auto x = testutil::randn(rng, 512, 5.0);
    const Recording rec = Recording::make({"ch"}, fs, {x});
    const auto a = build_feature_matrix(rec, classifier_bands());
    const auto b = build_feature_matrix(rec, classifier_bands());
    CHECK(a[0].values == b[0].values);
    CHECK(a[0].valid == b[0].valid);
  }
}

TEST_CASE("feature csv export and re-import") {
  const auto dir = testutil::scratch_dir("features_csv");
  std::mt19937_64 rng(909);
  const Recording rec = Recording::make({"ch"}, 64.0, {testutil::randn(rng, 512, 10.0)});
  auto mats = build_feature_matrix(rec, classifier_bands());
  mats[0].valid[2][3] = 0;
  write_feature_csv(mats[0], dir + "/f.csv");
  const FeatureMatrix back = read_feature_csv(dir + "/f.csv");
  CHECK(back.feature_names == mats[0].feature_names);
  CHECK(back.rows() == mats[0].rows());
  CHECK(back.values == mats[0].values);  // shortest round-trip formatting
  CHECK(back.valid[2][3] == 0);
  CHECK(back.valid[2][2] == 1);
}
