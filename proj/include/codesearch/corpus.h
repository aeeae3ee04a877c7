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

#ifndef CODESEARCH_CORPUS_H_
#define CODESEARCH_CORPUS_H_

// Corpus data model: question/code pairs, tokenization, the shared
// vocabulary, fixed-length id sequences and the train/validation split.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codesearch {

enum class Origin { kTrainAuto, kManualDev, kManualEval };

std::string_view OriginName(Origin origin);
// Throws DataError for anything but "train_auto", "manual_dev", "manual_eval".
Origin ParseOrigin(std::string_view name);

struct QCPair {
  std::string id;
  std::string question;
  std::string code;
  Origin origin = Origin::kTrainAuto;

  bool operator==(const QCPair&) const = default;
};

// Lowercased word tokens; every non-alphanumeric character (ASCII and the
// common Unicode whitespace/punctuation blocks) separates tokens and is
// dropped.
std::vector<std::string> TokenizeQuestion(std::string_view text);

// Identifier/number tokens with case preserved. Letters, digits and '_' form
// tokens; operators, brackets and whitespace separate them.
std::vector<std::string> TokenizeCode(std::string_view code);

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Token <-> id map shared by questions and code. Ids 0 and 1 are PAD and UNK;
// the remaining ids are assigned by descending corpus frequency with ties
// broken lexicographically. Immutable once built.
class Vocabulary {
 public:
  struct Entry {
    std::string token;
    std::uint64_t count = 0;
  };

  // Counts question and code tokens over `pairs`. Tokens seen fewer than
  // `min_count` times are left out and fold into UNK's count.
  static Vocabulary Build(std::span<const QCPair> pairs, std::size_t min_count);

  // Entries must be in id order and start with PAD and UNK.
  static Vocabulary FromEntries(std::vector<Entry> entries);

  static Vocabulary Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  // JSON Lines, one {"token","id","count"} object per id in ascending order.
  std::string Serialize() const;
  static Vocabulary Parse(std::istream& in, const std::string& source);

  // Hex SHA-256 of Serialize(); identifies the vocabulary in checkpoints.
  std::string ContentHash() const;

  std::size_t size() const { return entries_.size(); }
  std::size_t min_count() const { return min_count_; }

  // UNK for tokens not in the vocabulary.
  std::int32_t Id(std::string_view token) const;
  std::optional<std::int32_t> Find(std::string_view token) const;
  const std::string& Token(std::int32_t id) const;
  std::uint64_t Count(std::int32_t id) const;
  std::span<const Entry> entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t min_count_ = 1;
};

// Fixed-capacity id sequence: exactly max_len ids, PAD after true_length.
struct TokenSequence {
  std::vector<std::int32_t> ids;
  std::size_t true_length = 0;

  std::size_t max_len() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

TokenSequence EncodeSequence(const Vocabulary& vocab,
                             std::span<const std::string> tokens,
                             std::size_t max_len);

struct CorpusSplit {
  std::vector<QCPair> train;
  std::vector<QCPair> validation;
  std::uint64_t seed = 0;
};

// Seeded shuffle, then the first floor(70%) go to train.
CorpusSplit SplitTrainValidation(std::span<const QCPair> pairs,
                                 std::uint64_t seed);

// JSON Lines corpus. Every line must carry a unique non-empty id, non-blank
// question and code, and a known origin; violations throw DataError naming
// the line.
std::vector<QCPair> ParseCorpus(std::istream& in, const std::string& source);
std::vector<QCPair> ReadCorpus(const std::filesystem::path& path);
void WriteCorpus(const std::filesystem::path& path,
                 std::span<const QCPair> pairs);

std::map<Origin, std::size_t> CountByOrigin(std::span<const QCPair> pairs);
std::vector<QCPair> FilterByOrigin(std::span<const QCPair> pairs,
                                   Origin origin);

}  // namespace codesearch

#endif  // CODESEARCH_CORPUS_H_
