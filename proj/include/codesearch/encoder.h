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

#ifndef CODESEARCH_ENCODER_H_
#define CODESEARCH_ENCODER_H_

// Question and code encoders mapping token sequences into one joint space,
// and the CodeSearchModel that owns their parameters.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codesearch/checksum.h"
#include "codesearch/corpus.h"
#include "codesearch/kernels.h"
#include "codesearch/tensor.h"

namespace codesearch {

enum class Family { kEmbeddingBaseline, kUnif, kCnn };

std::string_view FamilyName(Family family);
// Accepts "embedding_baseline", "unif", "cnn"; throws std::invalid_argument.
Family ParseFamily(std::string_view name);

struct EncoderConfig {
  Family family = Family::kCnn;
  bool shared_weights = false;
  bool batch_norm = false;
  // Only used by the cnn family.
  std::size_t num_filters = 500;
  std::size_t window_size = 2;
  std::size_t embed_dim = 100;
  double margin = 0.05;
  std::size_t max_len_question = 25;
  std::size_t max_len_code = 200;
  bool freeze_embeddings = false;

  // Throws std::invalid_argument for shared unif towers, margin <= 0 and
  // zero sizes.
  void Validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

enum class Side { kQuestion, kCode };

// Everything a batched forward pass keeps for its backward pass.
struct BatchCache {
  struct Item {
    const TokenSequence* seq = nullptr;
    // cnn: the window-extended word vectors; otherwise the looked-up rows
    // after batch norm.
    Tensor input;
    // cnn: tanh activations (F x width).
    Tensor activation;
    std::vector<std::size_t> argmax;
    kernels::AttentionResult attention;
  };
  std::vector<Item> items;
  kernels::BatchNormCache bn;
  bool bn_applied = false;
};

class CodeSearchModel {
 public:
  // Word embeddings start from InitialEmbeddings; filters are uniform in
  // +-sqrt(6 / (window * d + F)); biases and the attention vector are zero.
  CodeSearchModel(const EncoderConfig& config, const Vocabulary& vocab,
                  std::uint64_t seed);
  ~CodeSearchModel();
  CodeSearchModel(CodeSearchModel&&) noexcept;
  CodeSearchModel& operator=(CodeSearchModel&&) noexcept;
  CodeSearchModel(const CodeSearchModel&) = delete;
  CodeSearchModel& operator=(const CodeSearchModel&) = delete;

  const EncoderConfig& config() const { return config_; }
  const std::string& vocab_hash() const { return vocab_hash_; }
  std::size_t vocab_size() const { return vocab_size_; }
  // num_filters for cnn, embed_dim otherwise. Same for both towers.
  std::size_t output_dim() const;

  // Copies a (|V| x d) table into every word-embedding table.
  void SetWordEmbeddings(const Tensor& table);

  // Infer mode. Read-only, so concurrent callers are fine. Throws DataError
  // "empty question" / "empty code" for sequences without real tokens.
  std::vector<double> EncodeQuestion(const TokenSequence& seq) const;
  std::vector<double> EncodeCode(const TokenSequence& seq) const;
  std::vector<double> Encode(Side side, const TokenSequence& seq) const;
  // Cosine of the two infer-mode embeddings.
  double Score(const TokenSequence& q, const TokenSequence& c) const;

  // (batch x output_dim) embeddings. In train mode batch norm uses the batch
  // statistics over all rows it sees (falling back to the running
  // statistics when there are fewer than two) and updates the running
  // statistics. `cache` may be null when no backward pass follows.
  Tensor Forward(Side side, std::span<const TokenSequence* const> batch,
                 Mode mode, BatchCache* cache);
  // Accumulates parameter gradients for d_out (batch x output_dim).
  void Backward(Side side, const BatchCache& cache, const Tensor& d_out);

  // Distinct parameters in a fixed order. Aliased tensors appear once.
  std::vector<Parameter*> Parameters();
  // Parameters() minus word-embedding tables when they are frozen.
  std::vector<Parameter*> TrainableParameters();
  void ZeroGrad();

  // "CNCM" checkpoint bytes: magic, u32 version 1, u64-length-prefixed JSON
  // header {"config","vocab_hash","vocab_size"}, then one record per tensor
  // (u32 name length, name, u32 rank, u64 dims, float32 data) until the end.
  std::string Serialize() const;
  static CodeSearchModel Parse(std::string_view bytes,
                               const std::string& source);
  void Save(const std::filesystem::path& path) const;
  // Throws DataError when the checkpoint was trained with another vocabulary.
  static CodeSearchModel Load(const std::filesystem::path& path,
                              const Vocabulary& vocab);
  // SHA-256 of Serialize().
  Digest Checksum() const;

 private:
  struct Tower;

  CodeSearchModel(const EncoderConfig& config, std::string vocab_hash,
                  std::size_t vocab_size, std::uint64_t seed);
  Tower& tower(Side side) const;
  Tensor Run(Side side, std::span<const TokenSequence* const> batch,
             Mode mode, BatchCache* cache) const;
  // Named state tensors in checkpoint order (parameters, then batch-norm
  // running statistics).
  std::vector<std::pair<std::string, Tensor*>> StateTensors() const;

  EncoderConfig config_;
  std::string vocab_hash_;
  std::size_t vocab_size_ = 0;
  std::shared_ptr<Tower> question_;
  // Same object as question_ when weights are shared.
  std::shared_ptr<Tower> code_;
};

// A corpus pair tokenized and encoded for one model configuration.
struct EncodedPair {
  std::string id;
  TokenSequence question;
  TokenSequence code;
};

// Pairs whose question or code has no tokens at all cannot be encoded; they
// are left out and counted in `dropped`.
std::vector<EncodedPair> EncodePairs(std::span<const QCPair> pairs,
                                     const Vocabulary& vocab,
                                     const EncoderConfig& config,
                                     std::size_t* dropped = nullptr);

std::string EncoderConfigToJson(const EncoderConfig& config);
EncoderConfig EncoderConfigFromJson(std::string_view json);

}  // namespace codesearch

#endif  // CODESEARCH_ENCODER_H_
