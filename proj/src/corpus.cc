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

#include "codesearch/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "codesearch/checksum.h"
#include "codesearch/error.h"
#include "codesearch/rng.h"
#include "json.hpp"

namespace codesearch {
namespace {

using json = nlohmann::json;

// Decodes one code point starting at s[i] and advances i. Malformed bytes
// decode to U+FFFD and consume a single byte.
char32_t DecodeUtf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(k);
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += len;
  return cp;
}

void AppendUtf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool IsAsciiAlnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

// Unicode whitespace plus the punctuation/symbol blocks that show up in
// Stack Overflow titles. Everything else above ASCII counts as a word
// character.
bool IsUnicodeSeparator(char32_t cp) {
  if (cp == 0xFFFD) return true;
  if (cp == 0x85 || cp == 0xA0 || cp == 0x1680 || cp == 0x3000) return true;
  if (cp >= 0x80 && cp < 0xA0) return true;  // C1 controls
  if (cp >= 0xA1 && cp <= 0xBF && cp != 0xAA && cp != 0xB5 && cp != 0xBA) {
    return true;
  }
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x2190 && cp <= 0x21FF) return true;  // arrows
  if (cp >= 0x3001 && cp <= 0x303F) return true;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;  // fullwidth punctuation
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  return false;
}

char32_t ToLower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  return cp;
}

template <typename IsWordChar, typename Fold>
std::vector<std::string> Split(std::string_view text, IsWordChar is_word,
                               Fold fold) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = DecodeUtf8(text, i);
    if (is_word(cp)) {
      AppendUtf8(current, fold(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  });
}

}  // namespace

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kTrainAuto:
      return "train_auto";
    case Origin::kManualDev:
      return "manual_dev";
    case Origin::kManualEval:
      return "manual_eval";
  }
  return "train_auto";
}

Origin ParseOrigin(std::string_view name) {
  if (name == "train_auto") return Origin::kTrainAuto;
  if (name == "manual_dev") return Origin::kManualDev;
  if (name == "manual_eval") return Origin::kManualEval;
  throw DataError("unknown origin \"" + std::string(name) + "\"");
}

std::vector<std::string> TokenizeQuestion(std::string_view text) {
  return Split(
      text,
      [](char32_t cp) {
        return cp < 0x80 ? IsAsciiAlnum(cp) : !IsUnicodeSeparator(cp);
      },
      ToLower);
}

std::vector<std::string> TokenizeCode(std::string_view code) {
  return Split(
      code,
      [](char32_t cp) {
        return cp < 0x80 ? (IsAsciiAlnum(cp) || cp == '_')
                         : !IsUnicodeSeparator(cp);
      },
      [](char32_t cp) { return cp; });
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::Build(std::span<const QCPair> pairs,
                             std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (pairs.empty()) throw DataError("empty corpus");

  std::unordered_map<std::string, std::uint64_t> counts;
  for (const QCPair& p : pairs) {
    for (auto& t : TokenizeQuestion(p.question)) ++counts[std::move(t)];
    for (auto& t : TokenizeCode(p.code)) ++counts[std::move(t)];
  }

  std::vector<Entry> kept;
  std::uint64_t unk = 0;
  for (auto& [token, count] : counts) {
    if (count >= min_count) {
      kept.push_back({token, count});
    } else {
      unk += count;
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.token < b.token;
  });

  std::vector<Entry> entries;
  entries.reserve(kept.size() + 2);
  entries.push_back({std::string(kPadToken), 0});
  entries.push_back({std::string(kUnkToken), unk});
  for (auto& e : kept) entries.push_back(std::move(e));

  Vocabulary v = FromEntries(std::move(entries));
  v.min_count_ = min_count;
  return v;
}

Vocabulary Vocabulary::FromEntries(std::vector<Entry> entries) {
  if (entries.size() < 2 || entries[0].token != kPadToken ||
      entries[1].token != kUnkToken) {
    throw DataError("vocabulary must start with <pad> and <unk>");
  }
  Vocabulary v;
  v.entries_ = std::move(entries);
  v.index_.reserve(v.entries_.size());
  std::uint64_t smallest = 0;
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    auto [it, inserted] =
        v.index_.emplace(v.entries_[i].token, static_cast<std::int32_t>(i));
    if (!inserted) {
      throw DataError("duplicate vocabulary token \"" + v.entries_[i].token +
                      "\"");
    }
    if (i >= 2 && (smallest == 0 || v.entries_[i].count < smallest)) {
      smallest = v.entries_[i].count;
    }
  }
  v.min_count_ = smallest == 0 ? 1 : smallest;
  return v;
}

std::int32_t Vocabulary::Id(std::string_view token) const {
  return Find(token).value_or(kUnkId);
}

std::optional<std::int32_t> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::Token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary");
  }
  return entries_[static_cast<std::size_t>(id)].token;
}

std::uint64_t Vocabulary::Count(std::int32_t id) const {
  Token(id);
  return entries_[static_cast<std::size_t>(id)].count;
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    json line = {{"token", entries_[i].token},
                 {"id", i},
                 {"count", entries_[i].count}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string Vocabulary::ContentHash() const {
  return ToHex(Sha256(Serialize()));
}

Vocabulary Vocabulary::Parse(std::istream& in, const std::string& source) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto id = j.at("id").get<std::size_t>();
      if (id != entries.size()) {
        throw DataError("ids must be consecutive from 0");
      }
      entries.push_back({j.at("token").get<std::string>(),
                         j.at("count").get<std::uint64_t>()});
    } catch (const json::exception& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return FromEntries(std::move(entries));
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  return Parse(in, path.string());
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << Serialize();
}

// ---------------------------------------------------------------------------

TokenSequence EncodeSequence(const Vocabulary& vocab,
                             std::span<const std::string> tokens,
                             std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  TokenSequence seq;
  seq.true_length = std::min(tokens.size(), max_len);
  seq.ids.assign(max_len, kPadId);
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    seq.ids[i] = vocab.Id(tokens[i]);
  }
  return seq;
}

CorpusSplit SplitTrainValidation(std::span<const QCPair> pairs,
                                 std::uint64_t seed) {
  if (pairs.size() < 2) {
    throw DataError("need at least 2 pairs to split, got " +
                    std::to_string(pairs.size()));
  }
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(DeriveSeed(seed, 0x5711u));
  rng.Shuffle(order.begin(), order.end());

  const std::size_t n_train = pairs.size() * 7 / 10;
  CorpusSplit split;
  split.seed = seed;
  split.train.reserve(n_train);
  split.validation.reserve(pairs.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.validation).push_back(pairs[order[i]]);
  }
  return split;
}

std::vector<QCPair> ParseCorpus(std::istream& in, const std::string& source) {
  std::vector<QCPair> pairs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (IsBlank(line)) continue;
    QCPair p;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) fail("expected a JSON object");
      p.id = j.at("id").get<std::string>();
      p.question = j.at("question").get<std::string>();
      p.code = j.at("code").get<std::string>();
      p.origin = ParseOrigin(j.at("origin").get<std::string>());
    } catch (const json::exception& e) {
      fail(std::string("malformed record: ") + e.what());
    } catch (const DataError& e) {
      if (std::string_view(e.what()).starts_with(source)) throw;
      fail(e.what());
    }
    if (p.id.empty()) fail("empty id");
    if (IsBlank(p.question)) fail("blank question for id \"" + p.id + "\"");
    if (IsBlank(p.code)) fail("blank code for id \"" + p.id + "\"");
    if (!seen.insert(p.id).second) fail("duplicate id \"" + p.id + "\"");
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError(source + ": empty corpus");
  return pairs;
}

std::vector<QCPair> ReadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return ParseCorpus(in, path.string());
}

void WriteCorpus(const std::filesystem::path& path,
                 std::span<const QCPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const QCPair& p : pairs) {
    json j = {{"id", p.id},
              {"question", p.question},
              {"code", p.code},
              {"origin", OriginName(p.origin)}};
    out << j.dump() << '\n';
  }
}

std::map<Origin, std::size_t> CountByOrigin(std::span<const QCPair> pairs) {
  std::map<Origin, std::size_t> counts{{Origin::kTrainAuto, 0},
                                       {Origin::kManualDev, 0},
                                       {Origin::kManualEval, 0}};
  for (const QCPair& p : pairs) ++counts[p.origin];
  return counts;
}

std::vector<QCPair> FilterByOrigin(std::span<const QCPair> pairs,
                                   Origin origin) {
  std::vector<QCPair> out;
  for (const QCPair& p : pairs) {
    if (p.origin == origin) out.push_back(p);
  }
  return out;
}

}  // namespace codesearch
