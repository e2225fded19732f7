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

#include "tadet/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "tadet/errors.hpp"

namespace tadet {
namespace {

// Plan creation in FFTW is not thread safe; execution via fftw_execute_dft
// on caller-owned arrays is. Plans are created FFTW_UNALIGNED so they can be
// executed on any buffer of the right size.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in.data(), out.data(), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw NumericError("fftw plan creation failed for size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

std::vector<std::complex<double>> run_dft(std::span<const std::complex<double>> x, int sign) {
  if (x.empty()) return {};
  std::vector<std::complex<double>> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(x.size());
  fftw_plan plan = PlanCache::instance().get(x.size(), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> x) {
  return run_dft(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> fft_inverse(std::span<const std::complex<double>> x) {
  auto out = run_dft(x, FFTW_BACKWARD);
  const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> power_spectrum_onesided(std::span<const double> x) {
  std::vector<std::complex<double>> cx(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) cx[n] = x[n];
  auto spec = fft_forward(cx);
  std::vector<double> power(x.size() / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
  return power;
}

std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::vector<std::complex<double>> cx(n);
  for (std::size_t i = 0; i < n; ++i) cx[i] = x[i];
  auto spec = fft_forward(cx);
  // One-sided spectrum gain: keep DC, double strictly positive frequencies,
  // keep Nyquist for even lengths, zero the negative half.
  const std::size_t pos_end = (n % 2 == 0) ? n / 2 : (n + 1) / 2;  // exclusive
  for (std::size_t k = 1; k < pos_end; ++k) spec[k] *= 2.0;
  const std::size_t neg_begin = (n % 2 == 0) ? n / 2 + 1 : (n + 1) / 2;
  for (std::size_t k = neg_begin; k < n; ++k) spec[k] = 0.0;
  return fft_inverse(spec);
}

std::vector<double> hilbert_transform(std::span<const double> x) {
  auto z = analytic_signal(x);
  std::vector<double> h(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i].imag();
  return h;
}

}  // namespace tadet
