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

#include "tadet/filters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tadet/errors.hpp"
#include "tadet/fft.hpp"
#include "tadet/signal_io.hpp"

namespace tadet {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Stable analog Butterworth prototype poles on the unit circle.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(order);
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

// Bilinear transform with sampling rate fs: z = (2fs + s) / (2fs - s).
cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double freq_hz, double fs) { return 2.0 * fs * std::tan(kPi * freq_hz / fs); }

bool is_real(cplx p) { return std::abs(p.imag()) <= 1e-10 * (1.0 + std::abs(p)); }

struct DenSection {
  Biquad s;
  int order = 2;  // pole count: 2 for a pair, 1 for a lone real pole
};

// Groups digital poles into section denominators: conjugate pairs first, then
// real poles paired among themselves, a lone real pole as a first-order tail.
std::vector<DenSection> sections_from_poles(const std::vector<cplx>& poles) {
  std::vector<cplx> complex_upper;
  std::vector<double> reals;
  for (const cplx& p : poles) {
    if (is_real(p)) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      complex_upper.push_back(p);
    }
  }
  std::sort(complex_upper.begin(), complex_upper.end(),
            [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end());

  std::vector<DenSection> sections;
  for (const cplx& p : complex_upper) {
    DenSection d;
    d.s.a1 = -2.0 * p.real();
    d.s.a2 = std::norm(p);
    sections.push_back(d);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    DenSection d;
    d.s.a1 = -(reals[i] + reals[i + 1]);
    d.s.a2 = reals[i] * reals[i + 1];
    sections.push_back(d);
  }
  if (reals.size() % 2 == 1) {
    DenSection d;
    d.s.a1 = -reals.back();
    d.order = 1;
    sections.push_back(d);
  }
  return sections;
}

enum class ZeroKind { AtMinusOne, AtPlusOne, Bandpass };

// Fills numerators: low-pass sections carry zeros at z = -1, high-pass at
// z = +1, band-pass one of each.
std::vector<Biquad> assign_zeros(const std::vector<DenSection>& dens, ZeroKind kind) {
  std::vector<Biquad> sections;
  sections.reserve(dens.size());
  for (const DenSection& d : dens) {
    Biquad s = d.s;
    if (d.order == 1) {
      switch (kind) {
        case ZeroKind::AtMinusOne: s.b0 = 1.0; s.b1 = 1.0; break;
        case ZeroKind::AtPlusOne:  s.b0 = 1.0; s.b1 = -1.0; break;
        case ZeroKind::Bandpass:   s.b0 = 1.0; s.b2 = -1.0; break;
      }
    } else {
      switch (kind) {
        case ZeroKind::AtMinusOne: s.b0 = 1.0; s.b1 = 2.0; s.b2 = 1.0; break;
        case ZeroKind::AtPlusOne:  s.b0 = 1.0; s.b1 = -2.0; s.b2 = 1.0; break;
        case ZeroKind::Bandpass:   s.b0 = 1.0; s.b2 = -1.0; break;
      }
    }
    sections.push_back(s);
  }
  return sections;
}

void check_stability(const std::vector<cplx>& poles) {
  for (const cplx& p : poles) {
    if (!(std::abs(p) < 1.0 - 1e-12) || !std::isfinite(p.real()) || !std::isfinite(p.imag()))
      throw NumericError("butterworth design failed: pole at |z| >= 1");
  }
}

// Scales the cascade so |H(ref_hz)| = 1, spreading the gain across sections.
void normalize_gain(SosFilter& f, double ref_hz, double fs) {
  const double mag = std::abs(f.response_at(ref_hz, fs));
  if (!(mag > 0.0) || !std::isfinite(mag))
    throw NumericError("butterworth design failed: degenerate gain");
  const double per_section = std::pow(1.0 / mag, 1.0 / static_cast<double>(f.sections.size()));
  for (Biquad& s : f.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
}

void check_corner(double freq_hz, double fs) {
  if (!(freq_hz > 0.0) || !(freq_hz < fs / 2.0))
    throw ValidationError("filter corner " + std::to_string(freq_hz) +
                          " Hz outside (0, Nyquist) at fs=" + std::to_string(fs));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Odd (point-symmetric) reflection padding about the end samples.
std::vector<double> pad_odd_reflect(std::span<const double> x, std::size_t pad) {
  std::vector<double> out;
  out.reserve(x.size() + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) out.push_back(2.0 * x[0] - x[pad - i]);
  out.insert(out.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < pad; ++i) out.push_back(2.0 * x[n - 1] - x[n - 2 - i]);
  return out;
}

}  // namespace

std::complex<double> SosFilter::response_at(double freq_hz, double fs) const {
  const double w = 2.0 * kPi * freq_hz / fs;
  const cplx zinv = std::exp(cplx(0.0, -w));
  cplx h(1.0, 0.0);
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

SosFilter design_butterworth_lowpass(int order, double cutoff_hz, double fs) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  check_corner(cutoff_hz, fs);
  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(p * wc, fs));
  check_stability(zpoles);
  SosFilter f;
  f.sections = assign_zeros(sections_from_poles(zpoles), ZeroKind::AtMinusOne);
  f.realized_order = order;
  normalize_gain(f, 0.0, fs);
  return f;
}

SosFilter design_butterworth_highpass(int order, double cutoff_hz, double fs) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  check_corner(cutoff_hz, fs);
  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(wc / p, fs));
  check_stability(zpoles);
  SosFilter f;
  f.sections = assign_zeros(sections_from_poles(zpoles), ZeroKind::AtPlusOne);
  f.realized_order = order;
  normalize_gain(f, fs / 2.0, fs);
  return f;
}

SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  if (!(low_hz < high_hz)) throw ValidationError("bandpass requires low < high");
  check_corner(low_hz, fs);
  check_corner(high_hz, fs);
  const double w1 = prewarp(low_hz, fs);
  const double w2 = prewarp(high_hz, fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    // Roots of s^2 - bw*p*s + w0^2 = 0.
    const cplx half = 0.5 * bw * p;
    const cplx disc = std::sqrt(half * half - w0 * w0);
    zpoles.push_back(bilinear(half + disc, fs));
    zpoles.push_back(bilinear(half - disc, fs));
  }
  check_stability(zpoles);
  SosFilter f;
  f.sections = assign_zeros(sections_from_poles(zpoles), ZeroKind::Bandpass);
  f.realized_order = 2 * order;
  if (f.sections.size() != static_cast<std::size_t>(order))
    throw NumericError("bandpass section pairing failed");
  const double center_hz = fs / kPi * std::atan(w0 / (2.0 * fs));
  normalize_gain(f, center_hz, fs);
  return f;
}

std::vector<double> sos_filter_forward(const SosFilter& f, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : f.sections) {
    double s1 = 0.0, s2 = 0.0;  // direct form II transposed state
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::size_t settle_margin(const SosFilter& f, double attenuation) {
  double r_max = 0.0;
  for (const Biquad& s : f.sections) {
    // Poles of z^2 + a1 z + a2.
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r_max = std::max({r_max, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  if (!(r_max > 0.0) || r_max >= 1.0) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(attenuation) / std::log(r_max)));
}

std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x) {
  if (f.sections.empty()) return {x.begin(), x.end()};
  const std::size_t pad = 3 * static_cast<std::size_t>(f.realized_order);
  if (x.size() <= 2 * pad)
    throw ValidationError("filtfilt input too short: need more than " +
                          std::to_string(2 * pad) + " samples, got " + std::to_string(x.size()));
  std::vector<double> padded = pad_odd_reflect(x, pad);
  std::vector<double> y = sos_filter_forward(f, padded);
  std::reverse(y.begin(), y.end());
  y = sos_filter_forward(f, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + pad, y.begin() + pad + x.size()};
}

std::vector<double> design_fir_lowpass_hamming(std::size_t length, double cutoff_hz, double fs) {
  if (length < 3 || length % 2 == 0)
    throw ValidationError("FIR length must be odd and >= 3 for symmetric linear phase");
  check_corner(cutoff_hz, fs);
  const std::size_t mid = (length - 1) / 2;
  const double wc = 2.0 * kPi * cutoff_hz / fs;
  std::vector<double> taps(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double k = static_cast<double>(n) - static_cast<double>(mid);
    const double sinc = (n == mid) ? wc / kPi : std::sin(wc * k) / (kPi * k);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(length - 1));
    taps[n] = sinc * window;
  }
  double sum = 0.0;
  for (double t : taps) sum += t;
  for (double& t : taps) t /= sum;
  return taps;
}

std::complex<double> fir_response_at(std::span<const double> taps, double freq_hz, double fs) {
  const double w = 2.0 * kPi * freq_hz / fs;
  cplx h(0.0, 0.0);
  for (std::size_t n = 0; n < taps.size(); ++n)
    h += taps[n] * std::exp(cplx(0.0, -w * static_cast<double>(n)));
  return h;
}

void write_sos_csv(const SosFilter& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "b0,b1,b2,a1,a2\n";
  out << "# order," << f.realized_order << "\n";
  for (const Biquad& s : f.sections) {
    out << format_double(s.b0) << "," << format_double(s.b1) << "," << format_double(s.b2)
        << "," << format_double(s.a1) << "," << format_double(s.a2) << "\n";
  }
}

SosFilter read_sos_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line.rfind("b0,b1,b2,a1,a2", 0) != 0)
    throw ParseError(path + ": expected the b0,b1,b2,a1,a2 header");
  SosFilter f;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      if (line.rfind("# order,", 0) == 0) f.realized_order = std::stoi(line.substr(8));
      continue;
    }
    double values[5];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int i = 0; i < 5; ++i) {
      auto [next, ec] = std::from_chars(p, end, values[i]);
      if (ec != std::errc{} || (i < 4 && (next == end || *next != ',')))
        throw ParseError(path + ": line " + std::to_string(line_no) + ": bad coefficient row");
      p = next + (i < 4 ? 1 : 0);
    }
    f.sections.push_back({values[0], values[1], values[2], values[3], values[4]});
  }
  if (f.sections.empty()) throw ParseError(path + ": no coefficient rows");
  return f;
}

std::vector<double> fir_filter_aligned(std::span<const double> x, std::span<const double> taps) {
  if (taps.size() % 2 == 0) throw ValidationError("aligned FIR filtering needs odd tap count");
  const std::size_t mid = (taps.size() - 1) / 2;
  if (x.size() <= mid + 1)
    throw ValidationError("FIR input shorter than half the filter length");
  const std::vector<double> xp = pad_odd_reflect(x, mid);
  const std::size_t n = xp.size();
  const std::size_t l = taps.size();
  std::vector<double> y(x.size());

  if (static_cast<double>(n) * static_cast<double>(l) <= 1.6e7) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      // Aligned output i uses padded samples [i, i + 2*mid].
      double acc = 0.0;
      const std::size_t base = i + 2 * mid;
      for (std::size_t j = 0; j < l; ++j) acc += taps[j] * xp[base - j];
      y[i] = acc;
    }
    return y;
  }

  // FFT convolution for long inputs.
  const std::size_t m = next_pow2(n + l - 1);
  std::vector<cplx> fx(m, 0.0), ft(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) fx[i] = xp[i];
  for (std::size_t i = 0; i < l; ++i) ft[i] = taps[i];
  auto sx = fft_forward(fx);
  auto st = fft_forward(ft);
  for (std::size_t i = 0; i < m; ++i) sx[i] *= st[i];
  auto conv = fft_inverse(sx);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = conv[i + 2 * mid].real();
  return y;
}

}  // namespace tadet
