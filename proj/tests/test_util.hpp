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

#ifndef TADET_TESTS_TEST_UTIL_HPP
#define TADET_TESTS_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

inline std::vector<double> randn(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = gauss(rng);
  return x;
}

inline std::vector<double> tone(std::size_t n, double fs, double freq, double amp,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

inline double rms(const std::vector<double>& x, std::size_t begin = 0, std::size_t end = 0) {
  if (end == 0) end = x.size();
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

// Fresh scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tadet_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil

#endif  // TADET_TESTS_TEST_UTIL_HPP
