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

#ifndef TADET_FFT_HPP
#define TADET_FFT_HPP

#include <complex>
#include <span>
#include <vector>

namespace tadet {

// Forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / N). Arbitrary N.
std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> x);

// Inverse DFT including the 1/N factor.
std::vector<std::complex<double>> fft_inverse(std::span<const std::complex<double>> x);

// Power spectrum |X[k]|^2 of a real signal, bins k = 0..N/2.
std::vector<double> power_spectrum_onesided(std::span<const double> x);

// Analytic associate z = x + j H[x] via the full-length DFT method: negative
// frequencies zeroed, positive frequencies doubled, DC (and Nyquist for even
// N) kept.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

// Imaginary part of the analytic associate.
std::vector<double> hilbert_transform(std::span<const double> x);

}  // namespace tadet

#endif  // TADET_FFT_HPP
