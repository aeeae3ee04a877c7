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

#ifndef CODESEARCH_SKIPGRAM_H_
#define CODESEARCH_SKIPGRAM_H_

// Skip-gram word embeddings with negative sampling. The trained input-side
// table initializes the encoders' word embeddings.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codesearch/corpus.h"
#include "codesearch/tensor.h"

namespace codesearch {

struct SkipGramConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  // Decays linearly to 1e-4 of its start value over the whole run.
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

struct SkipGramResult {
  // (|V| x dim); row 0 (PAD) is all zeros.
  Tensor embeddings;
  // Mean negative-sampling loss per (center, context) pair, one per epoch.
  std::vector<double> epoch_loss;
};

// Uniform in [-0.5/dim, 0.5/dim] with the PAD row zeroed.
Tensor InitialEmbeddings(std::size_t vocab_size, std::size_t dim,
                         std::uint64_t seed);

// Question and code token streams of every pair, each its own sentence.
std::vector<std::vector<std::int32_t>> SkipGramSentences(
    std::span<const QCPair> pairs, const Vocabulary& vocab);

// Single-threaded and bitwise reproducible for a fixed config.
SkipGramResult TrainSkipGram(std::span<const QCPair> pairs,
                             const Vocabulary& vocab,
                             const SkipGramConfig& config);

// The k rows closest to `token` by cosine, descending, skipping the query,
// PAD and UNK. Throws DataError for tokens outside the vocabulary.
std::vector<std::pair<std::string, double>> NearestNeighbors(
    const Tensor& embeddings, const Vocabulary& vocab, std::string_view token,
    std::size_t k);

// "CNCW" file: magic, u32 version 1, u64 rows, u64 dim, then rows*dim
// float32 row-major, little-endian.
std::string SerializeEmbeddings(const Tensor& embeddings);
Tensor ParseEmbeddings(std::string_view bytes, const std::string& source);
void SaveEmbeddings(const std::filesystem::path& path,
                    const Tensor& embeddings);
Tensor LoadEmbeddings(const std::filesystem::path& path);

}  // namespace codesearch

#endif  // CODESEARCH_SKIPGRAM_H_
