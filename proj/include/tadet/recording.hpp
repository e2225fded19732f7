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

#ifndef TADET_RECORDING_HPP
#define TADET_RECORDING_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tadet {

// Multi-channel EEG segment. Amplitudes are in microvolts. validity[c][n] is
// 0 where a sample has been rejected or is otherwise unusable; rejected
// samples keep their amplitude so downstream stages can audit them.
struct Recording {
  std::vector<std::string> channel_labels;
  double sample_rate = 0.0;  // Hz
  std::vector<std::vector<double>> samples;    // [channel][sample], uV
  std::vector<std::vector<uint8_t>> validity;  // same shape, 1 = usable

  std::size_t channel_count() const { return samples.size(); }
  std::size_t sample_count() const { return samples.empty() ? 0 : samples[0].size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(sample_count()) / sample_rate : 0.0;
  }

  // Index of the channel with the given label; throws ValidationError listing
  // the available labels when absent.
  std::size_t channel_index(const std::string& label) const;

  // Checks the structural invariants: equal channel lengths, positive sample
  // rate, mask shape matching the samples. Throws ValidationError.
  void validate() const;

  // Convenience constructor for an all-valid recording.
  static Recording make(std::vector<std::string> labels, double fs,
                        std::vector<std::vector<double>> data);
};

enum class AnnotLabel : uint8_t { Burst, Interburst, TA, NonTA };

std::string to_string(AnnotLabel label);
// Throws ParseError on tokens outside {burst, interburst, TA, nonTA}.
AnnotLabel annot_label_from_string(const std::string& token);

// Scope value meaning "applies to every channel".
inline const char* kGlobalScope = "global";

struct Annotation {
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string scope;  // channel label or kGlobalScope
  AnnotLabel label = AnnotLabel::TA;

  double end_s() const { return onset_s + duration_s; }
  // Half-open containment: an instant sitting exactly on a boundary belongs
  // to the interval that starts there.
  bool contains(double t) const { return t >= onset_s && t < end_s(); }
  // Whether this entry applies to the given channel.
  bool applies_to(const std::string& channel) const {
    return scope == kGlobalScope || scope == channel;
  }
};

struct AnnotationTrack {
  std::vector<Annotation> entries;

  // Enforces: onset >= 0, duration > 0; same-scope-same-label entries do not
  // overlap; burst/interburst entries lie inside a covering TA interval.
  // Throws ValidationError.
  void validate() const;

  // First entry with the given label that contains t and applies to the
  // channel; nullptr when none does.
  const Annotation* find(double t, const std::string& channel, AnnotLabel label) const;
};

}  // namespace tadet

#endif  // TADET_RECORDING_HPP
