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

#include "tadet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tadet/errors.hpp"
#include "tadet/filters.hpp"

namespace tadet {
namespace {

constexpr double kRampSeconds = 0.25;
constexpr double kTaBlockLo = 120.0, kTaBlockHi = 300.0;  // seconds
constexpr double kCarrierLow = 0.5, kCarrierHigh = 12.0;  // Hz
constexpr double kNoiseFloorCutoff = 24.0;                // Hz

// Deterministic uniform double in [lo, hi) independent of libstdc++'s
// distribution implementations.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// Box-Muller standard normal, deterministic across platforms.
class Gaussian {
 public:
  explicit Gaussian(std::mt19937_64& rng) : rng_(rng) {}
  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = uniform(rng_, 0.0, 1.0);
    while (u1 <= 0.0) u1 = uniform(rng_, 0.0, 1.0);
    const double u2 = uniform(rng_, 0.0, 1.0);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    have_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64& rng_;
  double spare_ = 0.0;
  bool have_ = false;
};

struct Segment {
  double begin_s = 0.0;
  double end_s = 0.0;
  AnnotLabel label = AnnotLabel::NonTA;  // Burst / Interburst / NonTA
  double target_pp_uv = 0.0;             // drawn later, per channel
};

// Burst-filtered noise carrier with the startup transient discarded.
std::vector<double> colored_noise(std::mt19937_64& rng, std::size_t n, double fs,
                                  const SosFilter& filter) {
  const auto warmup = static_cast<std::size_t>(std::llround(4.0 * fs));
  Gaussian gauss(rng);
  std::vector<double> white(n + warmup);
  for (double& v : white) v = gauss();
  auto filtered = sos_filter_forward(filter, white);
  return {filtered.begin() + static_cast<long>(warmup), filtered.end()};
}

}  // namespace

void SynthConfig::validate() const {
  if (!(fs > 0.0)) throw ValidationError("synth: fs must be > 0");
  if (!(duration_s >= 10.0)) throw ValidationError("synth: duration must be >= 10 s");
  if (!(burst_amp_lo_uv > 0.0 && burst_amp_lo_uv < burst_amp_hi_uv))
    throw ValidationError("synth: burst amplitude range invalid");
  if (!(interburst_amp_lo_uv > 0.0 && interburst_amp_lo_uv < interburst_amp_hi_uv))
    throw ValidationError("synth: inter-burst amplitude range invalid");
  if (!(nonta_amp_lo_uv > 0.0 && nonta_amp_lo_uv < nonta_amp_hi_uv))
    throw ValidationError("synth: non-TA amplitude range invalid");
  if (!(segment_lo_s >= 1.0 && segment_lo_s < segment_hi_s))
    throw ValidationError("synth: segment duration range invalid");
  if (!(ta_fraction >= 0.0 && ta_fraction <= 1.0))
    throw ValidationError("synth: ta_fraction must be in [0, 1]");
  if (!(noise_floor_uv >= 0.0)) throw ValidationError("synth: noise floor must be >= 0");
  if (n_channels == 0) throw ValidationError("synth: need at least one channel");
  if (!(kCarrierHigh < fs / 2.0))
    throw ValidationError("synth: fs too low for the 0.5-12 Hz carrier");
}

std::pair<Recording, AnnotationTrack> generate_recording(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const double fs = cfg.fs;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));

  // ---- state timeline: alternating TA / non-TA blocks -------------------
  struct Block {
    double begin_s, end_s;
    bool ta;
  };
  std::vector<Block> blocks;
  if (cfg.ta_fraction >= 1.0) {
    blocks.push_back({0.0, cfg.duration_s, true});
  } else if (cfg.ta_fraction <= 0.0) {
    blocks.push_back({0.0, cfg.duration_s, false});
  } else {
    // Alternating blocks whose expected lengths keep the overall TA share at
    // ta_fraction: base ~ U[120, 300], TA gets base * 2f, non-TA base * 2(1-f).
    bool ta = true;
    double t = 0.0;
    while (t < cfg.duration_s) {
      const double base = uniform(rng, kTaBlockLo, kTaBlockHi);
      const double share = ta ? cfg.ta_fraction : 1.0 - cfg.ta_fraction;
      const double len = std::max(30.0, base * 2.0 * share);
      double end = std::min(cfg.duration_s, t + len);
      if (cfg.duration_s - end < 30.0) end = cfg.duration_s;  // absorb slivers
      blocks.push_back({t, end, ta});
      t = end;
      ta = !ta;
    }
  }

  // ---- segments within blocks -------------------------------------------
  std::vector<Segment> segments;
  AnnotationTrack ann;
  for (const Block& block : blocks) {
    if (block.ta) {
      ann.entries.push_back({block.begin_s, block.end_s - block.begin_s, kGlobalScope,
                             AnnotLabel::TA});
      bool burst = true;
      double t = block.begin_s;
      while (t < block.end_s) {
        double end = t + uniform(rng, cfg.segment_lo_s, cfg.segment_hi_s);
        if (block.end_s - end < 1.0) end = block.end_s;  // merge trailing sliver
        end = std::min(end, block.end_s);
        segments.push_back({t, end, burst ? AnnotLabel::Burst : AnnotLabel::Interburst, 0.0});
        ann.entries.push_back({t, end - t, kGlobalScope,
                               burst ? AnnotLabel::Burst : AnnotLabel::Interburst});
        t = end;
        burst = !burst;
      }
    } else {
      ann.entries.push_back({block.begin_s, block.end_s - block.begin_s, kGlobalScope,
                             AnnotLabel::NonTA});
      // Slowly drifting level steps, far from the burst alternation rate.
      double t = block.begin_s;
      while (t < block.end_s) {
        double end = t + uniform(rng, 20.0, 40.0);
        if (block.end_s - end < 5.0) end = block.end_s;
        end = std::min(end, block.end_s);
        segments.push_back({t, end, AnnotLabel::NonTA, 0.0});
        t = end;
      }
    }
  }

  // ---- per-channel synthesis ---------------------------------------------
  Recording rec;
  rec.sample_rate = fs;
  const char* kLabels[4] = {"F3-T3", "F4-T4", "T4-Cz", "Cz-T3"};
  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    rec.channel_labels.push_back(c < 4 ? kLabels[c]
                                       : "ch" + std::to_string(c + 1));
  }

  const SosFilter carrier_filter =
      design_butterworth_bandpass(5, kCarrierLow, kCarrierHigh, fs);
  const SosFilter floor_filter = design_butterworth_lowpass(5, kNoiseFloorCutoff, fs);
  const auto ramp_half = static_cast<std::size_t>(std::llround(kRampSeconds * fs / 2.0));

  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    auto carrier = colored_noise(rng, n, fs, carrier_filter);

    // Per-segment target levels, calibrated on the carrier's core (the part
    // untouched by the boundary ramps) so the measured peak-to-peak matches
    // the draw.
    std::vector<double> gain(n, 1.0);
    for (Segment& seg : segments) {
      double pp_lo = 0.0, pp_hi = 0.0;
      switch (seg.label) {
        case AnnotLabel::Burst:
          pp_lo = cfg.burst_amp_lo_uv;
          pp_hi = cfg.burst_amp_hi_uv;
          break;
        case AnnotLabel::Interburst:
          pp_lo = cfg.interburst_amp_lo_uv;
          pp_hi = cfg.interburst_amp_hi_uv;
          break;
        default:
          pp_lo = cfg.nonta_amp_lo_uv;
          pp_hi = cfg.nonta_amp_hi_uv;
          break;
      }
      const double target = uniform(rng, pp_lo, pp_hi);
      auto begin = static_cast<std::size_t>(std::llround(seg.begin_s * fs));
      auto end = std::min(n, static_cast<std::size_t>(std::llround(seg.end_s * fs)));
      if (begin >= end) continue;
      std::size_t core_lo = begin + ramp_half, core_hi = end > ramp_half ? end - ramp_half : end;
      if (core_lo >= core_hi) {
        core_lo = begin;
        core_hi = end;
      }
      double mx = carrier[core_lo], mn = carrier[core_lo];
      for (std::size_t i = core_lo; i < core_hi; ++i) {
        mx = std::max(mx, carrier[i]);
        mn = std::min(mn, carrier[i]);
      }
      const double pp = mx - mn;
      const double g = pp > 0.0 ? target / pp : 0.0;
      for (std::size_t i = begin; i < end; ++i) gain[i] = g;
    }

    // Smooth the level steps with a quarter-second raised-cosine kernel.
    {
      const std::size_t klen = 2 * ramp_half + 1;
      std::vector<double> kernel(klen);
      double ksum = 0.0;
      for (std::size_t i = 0; i < klen; ++i) {
        kernel[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                         static_cast<double>(klen + 1));
        ksum += kernel[i];
      }
      for (double& v : kernel) v /= ksum;
      std::vector<double> smooth(n);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < klen; ++j) {
          const long idx = static_cast<long>(i) + static_cast<long>(j) - static_cast<long>(ramp_half);
          const auto clamped = static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(n) - 1));
          acc += kernel[j] * gain[clamped];
        }
        smooth[i] = acc;
      }
      gain.swap(smooth);
    }

    // Additive low-passed noise floor at the configured RMS.
    std::vector<double> channel(n);
    if (cfg.noise_floor_uv > 0.0) {
      auto floor_noise = colored_noise(rng, n, fs, floor_filter);
      double rms = 0.0;
      for (double v : floor_noise) rms += v * v;
      rms = std::sqrt(rms / static_cast<double>(n));
      const double s = rms > 0.0 ? cfg.noise_floor_uv / rms : 0.0;
      for (std::size_t i = 0; i < n; ++i) channel[i] = carrier[i] * gain[i] + s * floor_noise[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) channel[i] = carrier[i] * gain[i];
    }
    rec.samples.push_back(std::move(channel));
    rec.validity.emplace_back(n, uint8_t{1});
  }

  ann.validate();
  rec.validate();
  return {std::move(rec), std::move(ann)};
}

}  // namespace tadet
