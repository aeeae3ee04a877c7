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

#ifndef CODESEARCH_SEARCH_INDEX_H_
#define CODESEARCH_SEARCH_INDEX_H_

// Precomputed code embeddings answering free-text queries by exact cosine
// search.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codesearch/checksum.h"
#include "codesearch/corpus.h"
#include "codesearch/encoder.h"

namespace codesearch {

struct IndexEntry {
  std::string pair_id;
  std::string code;
  std::vector<float> embedding;

  bool operator==(const IndexEntry&) const = default;
};

// Immutable after BuildIndex/Parse, so concurrent queries are fine.
struct SnippetIndex {
  Digest model_hash{};
  std::size_t dim = 0;
  std::vector<IndexEntry> entries;

  bool operator==(const SnippetIndex&) const = default;
};

struct SearchHit {
  std::string pair_id;
  std::string code;
  double score = 0.0;
};

// One entry per pair, in pair order. Pairs whose code tokenizes to nothing
// are skipped and counted in `skipped`. Throws DataError when `pairs` is
// empty or nothing survives, and when `vocab` is not the model's.
SnippetIndex BuildIndex(const CodeSearchModel& model, const Vocabulary& vocab,
                        std::span<const QCPair> pairs,
                        std::size_t* skipped = nullptr);

// Top `k` entries by cosine with the encoded query, highest first, equal
// scores by ascending pair id. Throws DataError("empty query") when `text`
// has no tokens and DataError("stale index") when the index was built by a
// different model; std::invalid_argument for k == 0.
std::vector<SearchHit> Query(const SnippetIndex& index,
                             const CodeSearchModel& model,
                             const Vocabulary& vocab, std::string_view text,
                             std::size_t k);

// "CNCI" file format, little-endian.
std::string SerializeIndex(const SnippetIndex& index);
SnippetIndex ParseIndex(std::string_view bytes, const std::string& source);
void SaveIndex(const std::filesystem::path& path, const SnippetIndex& index);
SnippetIndex LoadIndex(const std::filesystem::path& path);

}  // namespace codesearch

#endif  // CODESEARCH_SEARCH_INDEX_H_
