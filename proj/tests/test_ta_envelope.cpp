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
#include "tadet/ta_envelope.hpp"
#include "test_util.hpp"

using namespace tadet;

TEST_CASE("moving median") {
  const double fs = 64.0;

  SUBCASE("constant trace unchanged") {
    const std::vector<double> x(500, 3.5);
    const auto y = moving_median(x, 3.0, fs);
    for (double v : y) CHECK(v == 3.5);
  }

  SUBCASE("single-sample impulse in zeros vanishes") {
    std::vector<double> x(640, 0.0);
    x[320] = 100.0;
    const auto y = moving_median(x, 3.0, fs);
    for (double v : y) CHECK(v == 0.0);
  }

  SUBCASE("step transition: crosses at the step, width within the window") {
    std::vector<double> x(1000, 0.0);
    for (std::size_t i = 500; i < x.size(); ++i) x[i] = 1.0;
    const auto y = moving_median(x, 3.0, fs);
    // Enumerating the centered 193-sample window: the median flips from 0 to
    // 1 exactly when more than half the window sits at 1, i.e. at the step.
    CHECK(y[498] == 0.0);
    CHECK(y[500] == 1.0);
    for (std::size_t i = 0; i < 404; ++i) CHECK(y[i] == 0.0);
    for (std::size_t i = 596; i < x.size(); ++i) CHECK(y[i] == 1.0);
  }

  SUBCASE("matches the brute-force oracle, edges included") {
    std::mt19937_64 rng(3);
    const auto x = testutil::randn(rng, 400);
    const auto y = moving_median(x, 0.5, fs);  // half = 16
    const auto want = oracle::moving_median(x, 16);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == want[i]);
  }

  SUBCASE("monotone: pointwise x <= y implies median(x) <= median(y)") {
    std::mt19937_64 rng(5);
    const auto x = testutil::randn(rng, 300);
    auto y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] += std::abs(std::sin(static_cast<double>(i)));
    const auto mx = moving_median(x, 1.0, fs);
    const auto my = moving_median(y, 1.0, fs);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(mx[i] <= my[i]);
  }

  SUBCASE("window below 3 samples rejected") {
    const std::vector<double> x(10, 0.0);
    CHECK_THROWS_AS(moving_median(x, 0.01, fs), ValidationError);
  }
}

TEST_CASE("average channels") {
  auto trace = [](std::vector<double> v) {
    ScoreTrace t;
    t.fs = 64.0;
    t.valid.assign(v.size(), 1);
    t.values = std::move(v);
    return t;
  };

  SUBCASE("identical channels: identity") {
    const auto t = trace({1.0, 2.0, 3.0});
    const auto mean = average_channels({t, t, t});
    CHECK(mean.values == t.values);
  }

  SUBCASE("[1,1] and [3,3] average to [2,2]") {
    const auto mean = average_channels({trace({1.0, 1.0}), trace({3.0, 3.0})});
    CHECK(mean.values == std::vector<double>{2.0, 2.0});
  }

  SUBCASE("invalid samples drop out of the mean") {
    auto a = trace({1.0, 1.0});
    auto b = trace({3.0, 3.0});
    auto c = trace({8.0, 8.0});
    auto d = trace({0.0, 0.0});
    d.valid[1] = 0;
    const auto mean = average_channels({a, b, c, d});
    CHECK(mean.values[0] == 3.0);
    CHECK(mean.values[1] == 4.0);  // mean of the remaining 3
    CHECK(mean.valid[1] == 1);
    auto e = trace({5.0});
    e.valid[0] = 0;
    const auto lone = average_channels({e});
    CHECK(lone.valid[0] == 0);
  }

  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(average_channels({trace({1.0}), trace({1.0, 2.0})}), ValidationError);
  }
}

TEST_CASE("peak spline envelope") {
  const double fs = 64.0;

  SUBCASE("sinusoid with period below min_sep flattens at the maximum") {
    const auto x = testutil::tone(2048, fs, 1.0, 5.0);  // 1 s period
    const auto env = peak_spline_envelope(x, 2.5, fs);
    for (std::size_t i = 200; i + 200 < env.size(); ++i)
      CHECK(std::abs(env[i] - 5.0) < 0.05);  // within 1%
  }

  SUBCASE("two peaks 1 s apart with min_sep 2.5 s: the taller survives") {
    std::vector<double> x(640, 0.0);
    // Triangle peaks at samples 256 (height 1) and 320 (height 2).
    for (int i = -32; i <= 32; ++i) {
      x[256 + i] = std::max(x[256 + i], 1.0 - std::abs(i) / 32.0);
      x[320 + i] = std::max(x[320 + i], 2.0 * (1.0 - std::abs(i) / 32.0));
    }
    const auto maxima = find_local_maxima(x);
    REQUIRE(maxima.size() == 2);
    const auto peaks = select_peaks_min_separation(x, maxima, 2.5, fs);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0] == 320);
    const auto env = peak_spline_envelope(x, 2.5, fs);
    for (double v : env) CHECK(v == 2.0);  // single peak: constant envelope
  }

  SUBCASE("spline interpolates the surviving peaks exactly") {
    std::mt19937_64 rng(11);
    const auto x = testutil::randn(rng, 2000);
    const auto maxima = find_local_maxima(x);
    const auto peaks = select_peaks_min_separation(x, maxima, 2.5, fs);
    const auto env = peak_spline_envelope(x, 2.5, fs);
    for (std::size_t p : peaks) CHECK(env[p] == doctest::Approx(x[p]).epsilon(1e-12));
  }

  SUBCASE("envelope commutes with adding a constant") {
    std::mt19937_64 rng(13);
    const auto x = testutil::randn(rng, 1500);
    auto shifted = x;
    for (double& v : shifted) v += 11.25;
    const auto e1 = peak_spline_envelope(x, 5.0, fs);
    const auto e2 = peak_spline_envelope(shifted, 5.0, fs);
    for (std::size_t i = 0; i < e1.size(); ++i)
      CHECK(e2[i] == doctest::Approx(e1[i] + 11.25).epsilon(1e-12));
  }

  SUBCASE("delaying the trace delays the envelope (interior)") {
    // Distinct, well-separated bumps: no suppression interactions, so the
    // delayed trace keeps the same interior peak set and the spline shifts
    // rigidly (end segments excluded).
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> gap(4.0, 8.0), height(1.0, 3.0);
    const std::size_t n = 16000, k = 100;
    std::vector<double> x(n, 0.0);
    std::vector<std::size_t> centers;
    for (double t = 5.0; t < static_cast<double>(n) / fs - 5.0; t += gap(rng)) {
      const auto c = static_cast<std::size_t>(t * fs);
      centers.push_back(c);
      const double h = height(rng);
      for (long d = -96; d <= 96; ++d) {
        const long idx = static_cast<long>(c) + d;
        if (idx < 0 || idx >= static_cast<long>(n)) continue;
        x[idx] += h * std::exp(-0.5 * (static_cast<double>(d) / 16.0) *
                               (static_cast<double>(d) / 16.0));
      }
    }
    std::vector<double> delayed(n, 0.0);
    for (std::size_t i = k; i < n; ++i) delayed[i] = x[i - k];
    const auto e1 = peak_spline_envelope(x, 2.5, fs);
    const auto e2 = peak_spline_envelope(delayed, 2.5, fs);
    const std::size_t lo = centers[2];
    const std::size_t hi = centers[centers.size() - 3];
    for (std::size_t i = lo; i < hi; ++i)
      CHECK(e2[i + k] == doctest::Approx(e1[i]).epsilon(1e-9));
  }

  SUBCASE("plateau counts once, at its midpoint") {
    std::vector<double> x = {0, 1, 2, 2, 2, 1, 0, 0, 0};
    const auto maxima = find_local_maxima(x);
    REQUIRE(maxima.size() == 1);
    CHECK(maxima[0] == 3);
  }

  SUBCASE("monotone trace has no interior maximum; envelope = trace") {
    std::vector<double> x(100);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    const auto env = peak_spline_envelope(x, 2.5, fs);
    CHECK(env == x);
  }

  SUBCASE("stride evaluation subsamples the same envelope") {
    std::mt19937_64 rng(19);
    const auto x = testutil::randn(rng, 1024);
    const auto full = peak_spline_envelope(x, 2.5, fs, 1);
    const auto strided = peak_spline_envelope(x, 2.5, fs, 16);
    REQUIRE(strided.size() == 64);
    for (std::size_t j = 0; j < strided.size(); ++j)
      CHECK(strided[j] == doctest::Approx(full[16 * j]).epsilon(1e-12));
  }

  SUBCASE("preconditions") {
    std::vector<double> x(2, 0.0);
    CHECK_THROWS_AS(peak_spline_envelope(x, 2.5, fs), ValidationError);
    std::vector<double> y(100, 0.0);
    CHECK_THROWS_AS(peak_spline_envelope(y, 0.01, fs), ValidationError);
  }
}

namespace {

// Synthetic confidence-score trace with ~10 s burst period inside TA
// (3-7 s bursts and inter-bursts) and a noisy mid level elsewhere.
TaTrainingTrace synthetic_score_trace(uint64_t seed, double fs, double duration_s) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  const auto n = static_cast<std::size_t>(duration_s * fs);
  TaTrainingTrace trace;
  trace.score.resize(n);
  trace.ta_label.resize(n);
  std::uniform_real_distribution<double> seg(3.0, 7.0);
  double t = 0.0;
  bool ta = true;
  while (t < duration_s) {
    const double end = std::min(duration_s, t + 90.0);
    if (ta) {
      double u = t;
      bool burst = true;
      while (u < end) {
        const double v = std::min(end, u + seg(rng));
        for (std::size_t i = static_cast<std::size_t>(u * fs);
             i < static_cast<std::size_t>(v * fs) && i < n; ++i) {
          trace.score[i] = (burst ? 2.0 : -1.0) + noise(rng);
          trace.ta_label[i] = 1;
        }
        u = v;
        burst = !burst;
      }
    } else {
      for (std::size_t i = static_cast<std::size_t>(t * fs);
           i < static_cast<std::size_t>(end * fs) && i < n; ++i) {
        trace.score[i] = 0.8 + noise(rng);
        trace.ta_label[i] = 0;
      }
    }
    t = end;
    ta = !ta;
  }
  return trace;
}

}  // namespace

TEST_CASE("TA-like score separates from flat score via the envelope") {
  const double fs = 64.0;
  const auto trace = synthetic_score_trace(23, fs, 480.0);
  const auto smooth = moving_median(trace.score, 3.0, fs);
  const auto env = peak_spline_envelope(smooth, 10.0, fs);
  double ta_sum = 0.0, non_sum = 0.0;
  std::size_t ta_n = 0, non_n = 0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (trace.ta_label[i] == 1) {
      ta_sum += env[i];
      ++ta_n;
    } else {
      non_sum += env[i];
      ++non_n;
    }
  }
  CHECK(ta_sum / static_cast<double>(ta_n) > non_sum / static_cast<double>(non_n));
}

TEST_CASE("optimize_min_separation") {
  SUBCASE("the standard grid has 20 candidates from 2.5 to 50") {
    const auto grid = min_separation_grid();
    REQUIRE(grid.size() == 20);
    CHECK(grid.front() == 2.5);
    CHECK(grid.back() == 50.0);
    CHECK(grid[1] - grid[0] == 2.5);
  }

  SUBCASE("a single-candidate grid is returned as is") {
    const auto trace = synthetic_score_trace(29, 64.0, 300.0);
    const std::vector<double> grid = {7.5};
    CHECK(optimize_min_separation({trace}, grid, 64.0) == 7.5);
  }

  SUBCASE("on burst-period ~10 s synthetic traces the optimum lies in [5, 25] s") {
    std::vector<TaTrainingTrace> traces;
    for (uint64_t seed : {31u, 37u, 41u}) {
      auto t = synthetic_score_trace(seed, 64.0, 480.0);
      t.score = moving_median(t.score, 3.0, 64.0);
      traces.push_back(std::move(t));
    }
    const double best = optimize_min_separation(traces, min_separation_grid(), 64.0);
    CHECK(best >= 5.0);
    CHECK(best <= 25.0);
  }

  SUBCASE("empty training set rejected") {
    CHECK_THROWS_AS(optimize_min_separation({}, min_separation_grid(), 64.0), ValidationError);
  }
}

TEST_CASE("decide_ta") {
  const double fs = 64.0;

  SUBCASE("envelope below threshold detects nothing") {
    const std::vector<double> env(1000, 1.0);
    const TaDecision d = decide_ta(env, fs, 2.06, 20.0, {});
    for (uint8_t v : d.binary_ta) CHECK(v == 0);
  }

  SUBCASE("epoch purity: mixed 20-minute epochs are excluded") {
    const auto n = static_cast<std::size_t>(45.0 * 60.0 * fs);  // 45 minutes
    std::vector<double> env(n, 3.0);
    AnnotationTrack ann;
    // First 20-minute epoch fully TA; second epoch mixed; remainder short.
    ann.entries.push_back({0.0, 1500.0, "global", AnnotLabel::TA});
    ann.entries.push_back({1500.0, 1200.0, "global", AnnotLabel::NonTA});
    const TaDecision d = decide_ta(env, fs, 2.06, 20.0, ann);
    REQUIRE(d.epochs.size() == 2);
    CHECK(d.epochs[0].truth == 1);
    CHECK(d.epochs[1].truth == -1);
    CHECK(d.epochs[0].mean_envelope == doctest::Approx(3.0));
  }

  SUBCASE("non-finite envelope rejected") {
    std::vector<double> env(100, 1.0);
    env[50] = std::nan("");
    CHECK_THROWS_AS(decide_ta(env, fs, 2.06, 20.0, {}), ValidationError);
  }
}

TEST_CASE("fill_gaps_nearest") {
  ScoreTrace t;
  t.fs = 64.0;
  t.values = {9.0, 1.0, 9.0, 9.0, 4.0};
  t.valid = {0, 1, 0, 0, 1};
  const auto filled = fill_gaps_nearest(t);
  CHECK(filled.values == std::vector<double>{1.0, 1.0, 1.0, 4.0, 4.0});
}
