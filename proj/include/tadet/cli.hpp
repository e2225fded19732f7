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

#ifndef TADET_CLI_HPP
#define TADET_CLI_HPP

namespace tadet {

// Batch front end. Exit codes: 0 success, 1 usage, 2 I/O or parse failure,
// 3 validation failure, 4 numerical failure. Failures print a single
// machine-parsable line to stderr: error kind=<k> code=<n> msg="...".
int run_cli(int argc, const char* const* argv);

}  // namespace tadet

#endif  // TADET_CLI_HPP
