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

#include "codesearch/search_index.h"

#include <algorithm>
#include <exception>
#include <stdexcept>

#include "codesearch/binary_io.h"
#include "codesearch/error.h"
#include "codesearch/kernels.h"

namespace codesearch {
namespace {

constexpr std::string_view kMagic = "CNCI";
constexpr std::uint32_t kVersion = 1;

void CheckVocab(const CodeSearchModel& model, const Vocabulary& vocab) {
  if (model.vocab_hash() != vocab.ContentHash()) {
    throw DataError("vocabulary does not match the model");
  }
}

}  // namespace

SnippetIndex BuildIndex(const CodeSearchModel& model, const Vocabulary& vocab,
                        std::span<const QCPair> pairs, std::size_t* skipped) {
  if (pairs.empty()) throw DataError("empty corpus");
  CheckVocab(model, vocab);
  const std::size_t max_len = model.config().max_len_code;
  std::vector<const QCPair*> kept;
  std::vector<TokenSequence> codes;
  for (const QCPair& p : pairs) {
    const auto tokens = TokenizeCode(p.code);
    if (tokens.empty()) continue;
    kept.push_back(&p);
    codes.push_back(EncodeSequence(vocab, tokens, max_len));
  }
  if (skipped) *skipped = pairs.size() - kept.size();
  if (kept.empty()) throw DataError("no indexable snippets");

  SnippetIndex index;
  index.model_hash = model.Checksum();
  index.dim = model.output_dim();
  index.entries.resize(kept.size());
  std::vector<std::exception_ptr> errors(kept.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < kept.size(); ++i) {
    try {
      const std::vector<double> v = model.EncodeCode(codes[i]);
      IndexEntry& e = index.entries[i];
      e.pair_id = kept[i]->id;
      e.code = kept[i]->code;
      e.embedding.assign(v.begin(), v.end());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return index;
}

std::vector<SearchHit> Query(const SnippetIndex& index,
                             const CodeSearchModel& model,
                             const Vocabulary& vocab, std::string_view text,
                             std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (index.model_hash != model.Checksum()) throw DataError("stale index");
  CheckVocab(model, vocab);
  const auto tokens = TokenizeQuestion(text);
  if (tokens.empty()) throw DataError("empty query");
  const std::vector<double> q = model.EncodeQuestion(
      EncodeSequence(vocab, tokens, model.config().max_len_question));

  std::vector<SearchHit> hits(index.entries.size());
  std::vector<double> row(index.dim);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const IndexEntry& e = index.entries[i];
    std::copy(e.embedding.begin(), e.embedding.end(), row.begin());
    hits[i] = {e.pair_id, e.code, kernels::Cosine(q, row)};
  }
  const auto better = [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pair_id < b.pair_id;
  };
  const std::size_t top = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + top, hits.end(), better);
  hits.resize(top);
  return hits;
}

std::string SerializeIndex(const SnippetIndex& index) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kVersion);
  w.Bytes({reinterpret_cast<const char*>(index.model_hash.data()),
           index.model_hash.size()});
  w.U64(index.dim);
  w.U64(index.entries.size());
  for (const IndexEntry& e : index.entries) {
    if (e.embedding.size() != index.dim) {
      throw std::invalid_argument("embedding size does not match dim");
    }
    w.LengthPrefixed(e.pair_id);
    w.LengthPrefixed(e.code);
    for (float v : e.embedding) w.F32(v);
  }
  return w.Take();
}

SnippetIndex ParseIndex(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.ExpectMagic(kMagic);
  if (const std::uint32_t v = r.U32(); v != kVersion) {
    throw DataError(source + ": unsupported index version " +
                    std::to_string(v));
  }
  SnippetIndex index;
  const std::string_view hash = r.Bytes(index.model_hash.size());
  std::copy(hash.begin(), hash.end(), index.model_hash.begin());
  index.dim = r.U64();
  const std::uint64_t n = r.U64();
  // Each entry needs at least its two length prefixes and the floats.
  if (index.dim == 0 || n > r.remaining() / (16 + 4 * index.dim)) {
    throw DataError(source + ": corrupt index header");
  }
  index.entries.resize(n);
  for (IndexEntry& e : index.entries) {
    e.pair_id = std::string(r.LengthPrefixed());
    e.code = std::string(r.LengthPrefixed());
    e.embedding.resize(index.dim);
    for (float& v : e.embedding) v = r.F32();
  }
  if (!r.AtEnd()) throw DataError(source + ": trailing bytes");
  return index;
}

void SaveIndex(const std::filesystem::path& path, const SnippetIndex& index) {
  WriteFileBytes(path, SerializeIndex(index));
}

SnippetIndex LoadIndex(const std::filesystem::path& path) {
  return ParseIndex(ReadFileBytes(path), path.string());
}

}  // namespace codesearch
