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

#include "tadet/recording.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tadet/errors.hpp"

namespace tadet {

std::size_t Recording::channel_index(const std::string& label) const {
  for (std::size_t c = 0; c < channel_labels.size(); ++c) {
    if (channel_labels[c] == label) return c;
  }
  std::ostringstream msg;
  msg << "unknown channel label '" << label << "'; available:";
  for (const auto& l : channel_labels) msg << " " << l;
  throw ValidationError(msg.str());
}

void Recording::validate() const {
  if (sample_rate <= 0.0) throw ValidationError("sample_rate must be > 0");
  if (channel_labels.size() != samples.size())
    throw ValidationError("channel_labels/samples size mismatch");
  if (validity.size() != samples.size())
    throw ValidationError("validity/samples channel count mismatch");
  const std::size_t n = sample_count();
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].size() != n)
      throw ValidationError("channel '" + channel_labels[c] + "' has inconsistent length");
    if (validity[c].size() != n)
      throw ValidationError("validity mask for channel '" + channel_labels[c] +
                            "' does not match sample length");
  }
}

Recording Recording::make(std::vector<std::string> labels, double fs,
                          std::vector<std::vector<double>> data) {
  Recording rec;
  rec.channel_labels = std::move(labels);
  rec.sample_rate = fs;
  rec.samples = std::move(data);
  rec.validity.reserve(rec.samples.size());
  for (const auto& ch : rec.samples) rec.validity.emplace_back(ch.size(), uint8_t{1});
  rec.validate();
  return rec;
}

std::string to_string(AnnotLabel label) {
  switch (label) {
    case AnnotLabel::Burst: return "burst";
    case AnnotLabel::Interburst: return "interburst";
    case AnnotLabel::TA: return "TA";
    case AnnotLabel::NonTA: return "nonTA";
  }
  return "?";
}

AnnotLabel annot_label_from_string(const std::string& token) {
  if (token == "burst") return AnnotLabel::Burst;
  if (token == "interburst") return AnnotLabel::Interburst;
  if (token == "TA") return AnnotLabel::TA;
  if (token == "nonTA") return AnnotLabel::NonTA;
  throw ParseError("unknown annotation label '" + token +
                   "' (expected burst, interburst, TA or nonTA)");
}

void AnnotationTrack::validate() const {
  for (const auto& e : entries) {
    if (e.onset_s < 0.0)
      throw ValidationError("annotation onset must be >= 0 (got " + std::to_string(e.onset_s) + ")");
    if (e.duration_s <= 0.0)
      throw ValidationError("annotation duration must be > 0 (got " + std::to_string(e.duration_s) + ")");
  }

  // Same scope + same label entries must not overlap (half-open intervals,
  // touching is fine).
  std::map<std::pair<std::string, AnnotLabel>, std::vector<const Annotation*>> groups;
  for (const auto& e : entries) groups[{e.scope, e.label}].push_back(&e);
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(), [](const Annotation* a, const Annotation* b) {
      return a->onset_s < b->onset_s;
    });
    for (std::size_t i = 1; i < group.size(); ++i) {
      if (group[i]->onset_s < group[i - 1]->end_s()) {
        std::ostringstream msg;
        msg << "overlapping annotations (scope=" << key.first << ", label="
            << to_string(key.second) << ") at " << group[i - 1]->onset_s << "s and "
            << group[i]->onset_s << "s";
        throw ValidationError(msg.str());
      }
    }
  }

  // Bursts and inter-bursts only exist inside TA activity.
  for (const auto& e : entries) {
    if (e.label != AnnotLabel::Burst && e.label != AnnotLabel::Interburst) continue;
    bool covered = false;
    for (const auto& ta : entries) {
      if (ta.label != AnnotLabel::TA) continue;
      if (ta.scope != kGlobalScope && ta.scope != e.scope) continue;
      if (ta.onset_s <= e.onset_s && e.end_s() <= ta.end_s()) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      std::ostringstream msg;
      msg << to_string(e.label) << " annotation at " << e.onset_s
          << "s is not inside any TA interval";
      throw ValidationError(msg.str());
    }
  }
}

const Annotation* AnnotationTrack::find(double t, const std::string& channel,
                                        AnnotLabel label) const {
  for (const auto& e : entries) {
    if (e.label == label && e.applies_to(channel) && e.contains(t)) return &e;
  }
  return nullptr;
}

}  // namespace tadet
