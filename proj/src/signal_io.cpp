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

#include "tadet/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tadet/errors.hpp"

namespace tadet {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& where) {
  const std::string t = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ParseError(where + ": cannot parse number '" + field + "'");
  return value;
}

long parse_long(const std::string& field, const std::string& where) {
  const std::string t = trim(field);
  long value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ParseError(where + ": cannot parse integer '" + field + "'");
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  return out;
}

bool is_time_column(const std::string& label) {
  std::string l = trim(label);
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  return l == "t" || l == "time" || l == "t_s";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::map<std::string, std::string> read_meta(const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path + ": expected key=value, got '" + line + "'");
    meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return meta;
}

void write_meta(const std::map<std::string, std::string>& meta, const std::string& path) {
  auto out = open_output(path);
  for (const auto& [key, value] : meta) out << key << "=" << value << "\n";
}

Recording read_recording_csv(const std::string& path, std::optional<double> sample_rate_hz) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");

  auto header = split_csv(line);
  std::size_t first_data_col = 0;
  if (!header.empty() && is_time_column(header[0])) first_data_col = 1;
  std::vector<std::string> labels;
  for (std::size_t i = first_data_col; i < header.size(); ++i) labels.push_back(trim(header[i]));
  if (labels.empty()) throw ParseError(path + ": header names no data channels");

  std::vector<std::vector<double>> samples(labels.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError(path + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      samples[i].push_back(parse_double(fields[first_data_col + i],
                                        path + ": line " + std::to_string(line_no)));
    }
  }

  double fs = 0.0;
  if (sample_rate_hz) {
    fs = *sample_rate_hz;
  } else {
    const std::string meta_path = path + ".meta";
    if (std::filesystem::exists(meta_path)) {
      auto meta = read_meta(meta_path);
      auto it = meta.find("sample_rate_hz");
      if (it != meta.end()) fs = parse_double(it->second, meta_path);
    }
  }
  if (!(fs > 0.0))
    throw ValidationError(path + ": sample rate unknown; pass --fs or provide a .meta sidecar");

  Recording rec = Recording::make(std::move(labels), fs, std::move(samples));

  const std::string mask_path = path + ".mask.csv";
  if (std::filesystem::exists(mask_path)) {
    auto min = open_input(mask_path);
    std::string mline;
    if (!std::getline(min, mline)) throw ParseError(mask_path + ": empty file");
    std::size_t mline_no = 1, row = 0;
    while (std::getline(min, mline)) {
      ++mline_no;
      if (trim(mline).empty()) continue;
      auto fields = split_csv(mline);
      if (fields.size() != rec.channel_count() + 1 || row >= rec.sample_count())
        throw ParseError(mask_path + ": line " + std::to_string(mline_no) +
                         ": shape does not match the recording");
      for (std::size_t c = 0; c < rec.channel_count(); ++c)
        rec.validity[c][row] = parse_long(fields[c + 1], mask_path) != 0 ? 1 : 0;
      ++row;
    }
    if (row != rec.sample_count())
      throw ParseError(mask_path + ": mask has " + std::to_string(row) + " rows, recording has " +
                       std::to_string(rec.sample_count()));
  }
  return rec;
}

void write_recording_csv(const Recording& rec, const std::string& path) {
  rec.validate();
  auto out = open_output(path);
  out << "t";
  for (const auto& label : rec.channel_labels) out << "," << label;
  out << "\n";
  const std::size_t n = rec.sample_count();
  for (std::size_t i = 0; i < n; ++i) {
    out << format_double(static_cast<double>(i) / rec.sample_rate);
    for (std::size_t c = 0; c < rec.channel_count(); ++c)
      out << "," << format_double(rec.samples[c][i]);
    out << "\n";
  }

  bool any_invalid = false;
  for (const auto& mask : rec.validity)
    any_invalid = any_invalid || std::any_of(mask.begin(), mask.end(), [](uint8_t v) { return !v; });
  if (any_invalid) {
    auto mout = open_output(path + ".mask.csv");
    mout << "t";
    for (const auto& label : rec.channel_labels) mout << "," << label;
    mout << "\n";
    for (std::size_t i = 0; i < n; ++i) {
      mout << format_double(static_cast<double>(i) / rec.sample_rate);
      for (std::size_t c = 0; c < rec.channel_count(); ++c)
        mout << "," << (rec.validity[c][i] ? 1 : 0);
      mout << "\n";
    }
  }
  write_meta({{"sample_rate_hz", format_double(rec.sample_rate)}}, path + ".meta");
}

namespace {

// EDF header geometry.
constexpr std::size_t kEdfHeaderBytes = 256;

std::string edf_field(const std::string& raw, std::size_t offset, std::size_t len,
                      const std::string& path) {
  if (offset + len > raw.size())
    throw ParseError(path + ": truncated EDF header at byte " + std::to_string(offset));
  return trim(raw.substr(offset, len));
}

}  // namespace

Recording read_recording_edf(const std::string& path) {
  auto in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();
  if (raw.size() < kEdfHeaderBytes)
    throw ParseError(path + ": file too small for an EDF header (" +
                     std::to_string(raw.size()) + " bytes)");

  const std::string reserved = edf_field(raw, 192, 44, path);
  if (reserved.rfind("EDF+D", 0) == 0)
    throw ParseError(path + ": discontinuous EDF+ (EDF+D) is not supported");

  const long header_bytes = parse_long(edf_field(raw, 184, 8, path), path + ": header-bytes field");
  const long n_records = parse_long(edf_field(raw, 236, 8, path), path + ": record-count field");
  const double record_dur = parse_double(edf_field(raw, 244, 8, path), path + ": record-duration field");
  const long ns = parse_long(edf_field(raw, 252, 4, path), path + ": signal-count field");
  if (ns <= 0) throw ParseError(path + ": signal count must be positive");
  if (n_records < 0) throw ParseError(path + ": record count must be non-negative");
  if (!(record_dur > 0.0)) throw ParseError(path + ": record duration must be positive");
  if (header_bytes != static_cast<long>(kEdfHeaderBytes * (ns + 1)))
    throw ParseError(path + ": header size field " + std::to_string(header_bytes) +
                     " does not match 256*(ns+1) = " + std::to_string(256 * (ns + 1)));
  if (raw.size() < static_cast<std::size_t>(header_bytes))
    throw ParseError(path + ": truncated signal headers at byte " + std::to_string(raw.size()));

  struct SignalHeader {
    std::string label, dim;
    double phys_min, phys_max;
    long dig_min, dig_max, samples_per_record;
  };
  std::vector<SignalHeader> sigs(ns);
  const std::size_t base = kEdfHeaderBytes;
  const std::size_t nsz = static_cast<std::size_t>(ns);
  for (std::size_t i = 0; i < nsz; ++i) {
    SignalHeader& s = sigs[i];
    s.label = edf_field(raw, base + 16 * i, 16, path);
    s.dim = edf_field(raw, base + nsz * (16 + 80) + 8 * i, 8, path);
    s.phys_min = parse_double(edf_field(raw, base + nsz * (16 + 80 + 8) + 8 * i, 8, path),
                              path + ": physical minimum of signal " + std::to_string(i));
    s.phys_max = parse_double(edf_field(raw, base + nsz * (16 + 80 + 16) + 8 * i, 8, path),
                              path + ": physical maximum of signal " + std::to_string(i));
    s.dig_min = parse_long(edf_field(raw, base + nsz * (16 + 80 + 24) + 8 * i, 8, path),
                           path + ": digital minimum of signal " + std::to_string(i));
    s.dig_max = parse_long(edf_field(raw, base + nsz * (16 + 80 + 32) + 8 * i, 8, path),
                           path + ": digital maximum of signal " + std::to_string(i));
    s.samples_per_record =
        parse_long(edf_field(raw, base + nsz * (16 + 80 + 40 + 80) + 8 * i, 8, path),
                   path + ": samples-per-record of signal " + std::to_string(i));
    if (s.dig_max <= s.dig_min)
      throw ParseError(path + ": signal " + std::to_string(i) + " has digital max <= min");
    if (s.samples_per_record <= 0)
      throw ParseError(path + ": signal " + std::to_string(i) + " has no samples per record");
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < nsz; ++i) {
    if (sigs[i].label != "EDF Annotations") keep.push_back(i);
  }
  if (keep.empty()) throw ParseError(path + ": no data signals (annotation channels only)");
  const double fs0 = static_cast<double>(sigs[keep[0]].samples_per_record) / record_dur;
  for (std::size_t i : keep) {
    const double fs = static_cast<double>(sigs[i].samples_per_record) / record_dur;
    if (std::abs(fs - fs0) > 1e-9)
      throw ParseError(path + ": mixed sampling rates across data signals are not supported");
  }

  std::size_t record_bytes = 0;
  for (const auto& s : sigs) record_bytes += static_cast<std::size_t>(s.samples_per_record) * 2;
  const std::size_t expected = static_cast<std::size_t>(header_bytes) +
                               record_bytes * static_cast<std::size_t>(n_records);
  if (raw.size() < expected)
    throw ParseError(path + ": data truncated at byte " + std::to_string(raw.size()) +
                     " (expected " + std::to_string(expected) + ")");

  Recording rec;
  rec.sample_rate = fs0;
  for (std::size_t i : keep) rec.channel_labels.push_back(sigs[i].label);
  rec.samples.assign(keep.size(), {});
  for (std::size_t k = 0; k < keep.size(); ++k)
    rec.samples[k].reserve(static_cast<std::size_t>(n_records) *
                           static_cast<std::size_t>(sigs[keep[k]].samples_per_record));

  std::size_t offset = static_cast<std::size_t>(header_bytes);
  for (long r = 0; r < n_records; ++r) {
    for (std::size_t i = 0; i < nsz; ++i) {
      const auto& s = sigs[i];
      const auto it = std::find(keep.begin(), keep.end(), i);
      const std::size_t spr = static_cast<std::size_t>(s.samples_per_record);
      if (it == keep.end()) {
        offset += spr * 2;
        continue;
      }
      const std::size_t out_ch = static_cast<std::size_t>(it - keep.begin());
      const double gain = (s.phys_max - s.phys_min) / static_cast<double>(s.dig_max - s.dig_min);
      double unit_scale = 1.0;  // physical dimension -> uV
      if (s.dim == "mV") unit_scale = 1e3;
      else if (s.dim == "V") unit_scale = 1e6;
      for (std::size_t j = 0; j < spr; ++j) {
        const auto lo = static_cast<unsigned char>(raw[offset]);
        const auto hi = static_cast<unsigned char>(raw[offset + 1]);
        const auto dig = static_cast<int16_t>(static_cast<uint16_t>(lo) |
                                              (static_cast<uint16_t>(hi) << 8));
        const double phys = (static_cast<double>(dig) - static_cast<double>(s.dig_min)) * gain +
                            s.phys_min;
        rec.samples[out_ch].push_back(phys * unit_scale);
        offset += 2;
      }
    }
  }

  rec.validity.reserve(rec.samples.size());
  for (const auto& ch : rec.samples) rec.validity.emplace_back(ch.size(), uint8_t{1});
  rec.validate();
  return rec;
}

Recording read_recording(const std::string& path, RecordingFormat format,
                         std::optional<double> sample_rate_hz) {
  switch (format) {
    case RecordingFormat::Edf: return read_recording_edf(path);
    case RecordingFormat::Csv: return read_recording_csv(path, sample_rate_hz);
  }
  throw ValidationError("unknown recording format");
}

Recording derive_bipolar_montage(const Recording& rec,
                                 const std::vector<std::pair<std::string, std::string>>& pairs) {
  rec.validate();
  Recording out;
  out.sample_rate = rec.sample_rate;
  const std::size_t n = rec.sample_count();
  for (const auto& [a, b] : pairs) {
    const std::size_t ia = rec.channel_index(a);
    const std::size_t ib = rec.channel_index(b);
    out.channel_labels.push_back(a + "-" + b);
    std::vector<double> diff(n);
    std::vector<uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      diff[i] = rec.samples[ia][i] - rec.samples[ib][i];
      mask[i] = rec.validity[ia][i] && rec.validity[ib][i];
    }
    out.samples.push_back(std::move(diff));
    out.validity.push_back(std::move(mask));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> standard_montage_pairs() {
  return {{"F3", "T3"}, {"F4", "T4"}, {"T4", "Cz"}, {"Cz", "T3"}};
}

AnnotationTrack read_annotations(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_csv(line);
  if (header.size() != 4 || trim(header[0]) != "onset_s" || trim(header[1]) != "duration_s" ||
      trim(header[2]) != "scope" || trim(header[3]) != "label")
    throw ParseError(path + ": expected header onset_s,duration_s,scope,label");

  AnnotationTrack track;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 4)
      throw ParseError(path + ": line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    Annotation a;
    a.onset_s = parse_double(fields[0], path + ": line " + std::to_string(line_no));
    a.duration_s = parse_double(fields[1], path + ": line " + std::to_string(line_no));
    a.scope = trim(fields[2]);
    try {
      a.label = annot_label_from_string(trim(fields[3]));
    } catch (const ParseError& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    track.entries.push_back(std::move(a));
  }
  track.validate();
  return track;
}

void write_annotations(const AnnotationTrack& track, const std::string& path) {
  track.validate();
  auto out = open_output(path);
  out << "onset_s,duration_s,scope,label\n";
  for (const auto& e : track.entries) {
    out << format_double(e.onset_s) << "," << format_double(e.duration_s) << "," << e.scope << ","
        << to_string(e.label) << "\n";
  }
}

}  // namespace tadet
