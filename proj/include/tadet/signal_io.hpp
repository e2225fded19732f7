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

#ifndef TADET_SIGNAL_IO_HPP
#define TADET_SIGNAL_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tadet/recording.hpp"

namespace tadet {

enum class RecordingFormat { Edf, Csv };

// Reads an EEG recording. CSV needs a sample rate, either passed here or
// found in a "<path>.meta" sidecar under the key sample_rate_hz. A
// "<path>.mask.csv" sidecar, when present, supplies the validity mask.
// EDF applies the per-signal physical scaling so samples come out in uV.
Recording read_recording(const std::string& path, RecordingFormat format,
                         std::optional<double> sample_rate_hz = std::nullopt);

Recording read_recording_csv(const std::string& path,
                             std::optional<double> sample_rate_hz = std::nullopt);
Recording read_recording_edf(const std::string& path);

// Header row "t,<labels...>", one row per sample, shortest round-trip float
// formatting. Also writes "<path>.mask.csv" when any sample is invalid, and
// a "<path>.meta" sidecar carrying sample_rate_hz.
void write_recording_csv(const Recording& rec, const std::string& path);

// Bipolar montage: one output channel per (a, b) pair with samples a - b and
// validity mask AND'ed. Unknown labels raise ValidationError listing the
// available channels.
Recording derive_bipolar_montage(const Recording& rec,
                                 const std::vector<std::pair<std::string, std::string>>& pairs);

// The montage used throughout: F3-T3, F4-T4, T4-Cz, Cz-T3.
std::vector<std::pair<std::string, std::string>> standard_montage_pairs();

// Annotation CSV: header onset_s,duration_s,scope,label. Both directions
// validate the track invariants. write(read(f)) == f for files produced by
// write_annotations.
AnnotationTrack read_annotations(const std::string& path);
void write_annotations(const AnnotationTrack& track, const std::string& path);

// "key=value" sidecar files.
std::map<std::string, std::string> read_meta(const std::string& path);
void write_meta(const std::map<std::string, std::string>& meta, const std::string& path);

// Shortest-round-trip decimal formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace tadet

#endif  // TADET_SIGNAL_IO_HPP
