// Copyright 2026 The codesearch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CODESEARCH_ERROR_H_
#define CODESEARCH_ERROR_H_

#include <stdexcept>
#include <string>

namespace codesearch {

// Bad or inconsistent input data: malformed corpus lines, empty corpora,
// stale indexes, vocabulary mismatches, unreadable files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric computation produced NaN/Inf or hit a degenerate case such as a
// zero-norm embedding.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace codesearch

#endif  // CODESEARCH_ERROR_H_
