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

#include "codesearch/synthetic.h"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "codesearch/rng.h"

namespace codesearch {
namespace {

struct Term {
  std::string_view words;
  std::string_view code;
};

constexpr std::array<Term, 12> kObjects = {{
    {"list", "items"},
    {"string", "text"},
    {"file", "handle"},
    {"dictionary", "mapping"},
    {"array", "arr"},
    {"dataframe", "df"},
    {"queue", "jobs"},
    {"tuple", "record"},
    {"column", "col"},
    {"matrix", "grid"},
    {"stream", "source"},
    {"json document", "payload"},
}};

// An operation is a (verb, noun) phrase. In code it is a single identifier,
// so only the pairing of adjacent question words tells operations sharing a
// verb or noun apart.
constexpr std::array<Term, 6> kVerbs = {{
    {"remove", "drop"},
    {"count", "count"},
    {"sort", "sort"},
    {"split", "split"},
    {"merge", "merge"},
    {"keep", "keep"},
}};

constexpr std::array<Term, 6> kNouns = {{
    {"duplicates", "dupes"},
    {"lines", "lines"},
    {"words", "words"},
    {"keys", "keys"},
    {"values", "vals"},
    {"blanks", "blanks"},
}};

constexpr std::array<std::string_view, 8> kNoise = {
    "python", "quickly", "best way", "efficiently",
    "simple", "in python 3", "without loops", "pythonic"};

struct Operation {
  std::string words;
  std::string code;
};

// Operation k is verb k / nouns, noun k % nouns.
Operation MakeOperation(const SyntheticOptions& o, std::size_t k) {
  const Term& verb = kVerbs[k / o.nouns];
  const Term& noun = kNouns[k % o.nouns];
  return {std::string(verb.words) + " " + std::string(noun.words),
          std::string(verb.code) + "_" + std::string(noun.code)};
}

struct Combination {
  std::size_t object;
  std::vector<std::size_t> chain;
};

void Permutations(std::size_t ops, std::size_t length,
                  std::vector<std::size_t>& prefix,
                  std::vector<std::vector<std::size_t>>& out) {
  if (prefix.size() == length) {
    out.push_back(prefix);
    return;
  }
  for (std::size_t k = 0; k < ops; ++k) {
    if (std::find(prefix.begin(), prefix.end(), k) != prefix.end()) continue;
    prefix.push_back(k);
    Permutations(ops, length, prefix, out);
    prefix.pop_back();
  }
}

std::vector<Combination> AllCombinations(const SyntheticOptions& o) {
  std::vector<std::vector<std::size_t>> chains;
  std::vector<std::size_t> prefix;
  for (std::size_t len = o.min_chain; len <= o.max_chain; ++len) {
    Permutations(o.verbs * o.nouns, len, prefix, chains);
  }
  std::vector<Combination> out;
  out.reserve(o.objects * chains.size());
  for (std::size_t obj = 0; obj < o.objects; ++obj) {
    for (const auto& chain : chains) out.push_back({obj, chain});
  }
  return out;
}

void Validate(const SyntheticOptions& o) {
  if (o.objects == 0 || o.objects > kObjects.size()) {
    throw std::invalid_argument("objects must be in 1.." +
                                std::to_string(kObjects.size()));
  }
  if (o.verbs == 0 || o.verbs > kVerbs.size()) {
    throw std::invalid_argument("verbs must be in 1.." +
                                std::to_string(kVerbs.size()));
  }
  if (o.nouns == 0 || o.nouns > kNouns.size()) {
    throw std::invalid_argument("nouns must be in 1.." +
                                std::to_string(kNouns.size()));
  }
  if (o.min_chain == 0 || o.min_chain > o.max_chain ||
      o.max_chain > o.verbs * o.nouns) {
    throw std::invalid_argument(
        "need 1 <= min_chain <= max_chain <= verbs * nouns");
  }
}

std::string Question(const SyntheticOptions& o, const Combination& c,
                     Rng& rng) {
  std::vector<std::string> ops;
  for (std::size_t k : c.chain) ops.push_back(MakeOperation(o, k).words);
  const std::string_view obj = kObjects[c.object].words;
  std::string q;
  switch (rng.Index(4)) {
    case 0:
      q = "how to " + ops[0];
      for (std::size_t i = 1; i < ops.size(); ++i) {
        q += " then " + ops[i];
      }
      q += " a " + std::string(obj);
      break;
    case 1:
      q = std::string(obj) + ": first " + ops[0];
      for (std::size_t i = 1; i < ops.size(); ++i) {
        q += ", then " + ops[i];
      }
      break;
    case 2:
      q = ops[0] + " a " + std::string(obj);
      for (std::size_t i = 1; i < ops.size(); ++i) {
        q += " and after that " + ops[i];
      }
      break;
    default:
      q = "in order " + ops[0];
      for (std::size_t i = 1; i < ops.size(); ++i) {
        q += ", " + ops[i];
      }
      q += " on my " + std::string(obj);
      break;
  }
  const std::size_t noise = rng.Index(3);
  for (std::size_t i = 0; i < noise; ++i) {
    const std::string_view word = kNoise[rng.Index(kNoise.size())];
    q = rng.Index(2) == 0 ? std::string(word) + " " + q
                          : q + " " + std::string(word);
  }
  return q;
}

std::string Code(const SyntheticOptions& o, const Combination& c,
                 Rng& rng) {
  const std::string obj(kObjects[c.object].code);
  std::string chain;
  for (std::size_t k : c.chain) chain += "." + MakeOperation(o, k).code + "()";
  std::string code;
  switch (rng.Index(3)) {
    case 0:
      code = "result = " + obj + chain;
      break;
    case 1:
      code = "out = " + obj;
      for (std::size_t k : c.chain) {
        code += "\nout = out." + MakeOperation(o, k).code + "()";
      }
      break;
    default:
      code = "def run(" + obj + "):\n    return " + obj + chain;
      break;
  }
  if (rng.Index(4) == 0) code = "import itertools\n" + code;
  if (rng.Index(4) == 0) code += "\nprint(result)";
  return code;
}

}  // namespace

std::size_t SyntheticCombinations(const SyntheticOptions& options) {
  Validate(options);
  return AllCombinations(options).size();
}

std::vector<QCPair> SyntheticCorpus(const SyntheticOptions& options) {
  Validate(options);
  std::vector<Combination> combos = AllCombinations(options);
  Rng order(DeriveSeed(options.seed, 0xc0b0));
  order.Shuffle(combos.begin(), combos.end());

  const std::pair<Origin, std::size_t> parts[] = {
      {Origin::kTrainAuto, options.train},
      {Origin::kManualDev, options.dev},
      {Origin::kManualEval, options.eval}};
  std::vector<QCPair> out;
  std::size_t next = 0;
  for (const auto& [origin, count] : parts) {
    for (std::size_t i = 0; i < count; ++i, ++next) {
      const Combination& c = combos[next % combos.size()];
      Rng rng(DeriveSeed(options.seed, next));
      QCPair p;
      p.id = "syn-" + std::string(OriginName(origin)) + "-" +
             std::to_string(i);
      p.question = Question(options, c, rng);
      p.code = Code(options, c, rng);
      p.origin = origin;
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace codesearch
