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

#ifndef CODESEARCH_SYNTHETIC_H_
#define CODESEARCH_SYNTHETIC_H_

// Generated question/code corpus for running the pipeline without the real
// dataset. Each pair describes an ordered chain of operations applied to an
// object. An operation is a verb-noun phrase: the question spells it out
// ("count words, then sort lines"), the code calls one identifier per
// operation (`result = text.count_words().sort_lines()`). With small verb
// and noun inventories most questions share most of their words, and
// "count words, sort lines" and "count lines, sort words" have the same bag
// of words. Ranking well needs the learned word mapping and adjacency.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "codesearch/corpus.h"

namespace codesearch {

struct SyntheticOptions {
  std::size_t train = 5000;
  std::size_t dev = 500;
  std::size_t eval = 500;
  // Sizes of the inventories actually used; there are verbs * nouns
  // operations.
  std::size_t objects = 8;
  std::size_t verbs = 3;
  std::size_t nouns = 3;
  std::size_t min_chain = 3;
  std::size_t max_chain = 4;
  std::uint64_t seed = 1;
};

// Every (object, ordered chain) combination is used once, in seeded random
// order, before any repeats. Pairs come out train_auto first, then
// manual_dev, then manual_eval. Throws std::invalid_argument for options
// outside the built-in inventories.
std::vector<QCPair> SyntheticCorpus(const SyntheticOptions& options);

// Number of distinct (object, chain) combinations for `options`.
std::size_t SyntheticCombinations(const SyntheticOptions& options);

}  // namespace codesearch

#endif  // CODESEARCH_SYNTHETIC_H_
