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

#ifndef TADET_ERRORS_HPP
#define TADET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tadet {

// File could not be read, or its contents do not parse under the declared
// format. Messages name the offending line or byte offset where possible.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violate a documented precondition or invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric procedure failed (unstable filter design, solver breakdown).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tadet

#endif  // TADET_ERRORS_HPP
