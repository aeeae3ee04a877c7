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
#include <cmath>
#include <string>
#include <vector>

#include "codesearch/error.h"
#include "codesearch/synthetic.h"
#include "codesearch/trainer.h"
#include "gtest/gtest.h"
#include "overfit_fixture.h"

namespace codesearch {
namespace {

std::vector<QCPair> SmallCorpus() {
  return {{"a", "how to sort a list", "result = items.sorted()"},
          {"b", "reverse a string", "out = text[::-1]"},
          {"c", "open a file", "handle = open(path)"}};
}

EncoderConfig SmallConfig() {
  EncoderConfig c;
  c.family = Family::kCnn;
  c.shared_weights = true;
  c.num_filters = 8;
  c.embed_dim = 4;
  return c;
}

TEST(BuildIndexTest, OneEntryPerPair) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 1);
  std::size_t skipped = 7;
  const SnippetIndex index = BuildIndex(model, vocab, pairs, &skipped);
  EXPECT_EQ(skipped, 0u);
  ASSERT_EQ(index.entries.size(), 3u);
  EXPECT_EQ(index.dim, 8u);
  EXPECT_EQ(index.model_hash, model.Checksum());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(index.entries[i].pair_id, pairs[i].id);
    EXPECT_EQ(index.entries[i].code, pairs[i].code);
    EXPECT_EQ(index.entries[i].embedding.size(), 8u);
  }
}

TEST(BuildIndexTest, SkipsEmptyCode) {
  auto pairs = SmallCorpus();
  pairs.push_back({"d", "nothing here", "  ;; "});
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 1);
  std::size_t skipped = 0;
  EXPECT_EQ(BuildIndex(model, vocab, pairs, &skipped).entries.size(), 3u);
  EXPECT_EQ(skipped, 1u);
}

TEST(BuildIndexTest, Errors) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 1);
  EXPECT_THROW(BuildIndex(model, vocab, {}), DataError);
  const Vocabulary other = Vocabulary::Build({pairs.data(), 1}, 1);
  EXPECT_THROW(BuildIndex(model, other, pairs), DataError);
}

TEST(BuildIndexTest, RebuildIsBitwiseIdentical) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 4);
  EXPECT_EQ(SerializeIndex(BuildIndex(model, vocab, pairs)),
            SerializeIndex(BuildIndex(model, vocab, pairs)));
}

TEST(QueryTest, KLargerThanIndexReturnsAllSorted) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 2);
  const SnippetIndex index = BuildIndex(model, vocab, pairs);
  const auto hits = Query(index, model, vocab, "sort a list", 10);
  ASSERT_EQ(hits.size(), 3u);
  for (std::size_t i = 1; i < hits.size(); ++i) {
    EXPECT_GE(hits[i - 1].score, hits[i].score);
  }
  for (const SearchHit& h : hits) {
    EXPECT_LE(std::abs(h.score), 1.0);
  }
}

TEST(QueryTest, EqualScoresOrderedByPairId) {
  // Identical code under three ids; every score ties.
  const std::vector<QCPair> pairs = {{"zeta", "q one", "x = y"},
                                     {"alpha", "q two", "x = y"},
                                     {"mid", "q three", "x = y"}};
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 3);
  const SnippetIndex index = BuildIndex(model, vocab, pairs);
  const auto hits = Query(index, model, vocab, "q one", 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].pair_id, "alpha");
  EXPECT_EQ(hits[1].pair_id, "mid");
  EXPECT_EQ(hits[2].pair_id, "zeta");
  const auto top = Query(index, model, vocab, "q one", 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].pair_id, "alpha");
}

TEST(QueryTest, Errors) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 2);
  const SnippetIndex index = BuildIndex(model, vocab, pairs);
  try {
    Query(index, model, vocab, " ?! ", 3);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "empty query");
  }
  const CodeSearchModel other(SmallConfig(), vocab, 3);
  try {
    Query(index, other, vocab, "sort", 3);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "stale index");
  }
  EXPECT_THROW(Query(index, model, vocab, "sort", 0), std::invalid_argument);
}

// Index scores against Score() on random models and corpora.
TEST(QueryPropertyTest, MatchesBruteForceScoring) {
  SyntheticOptions o;
  o.train = 40;
  o.dev = 0;
  o.eval = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    o.seed = seed;
    const auto pairs = SyntheticCorpus(o);
    const Vocabulary vocab = Vocabulary::Build(pairs, 1);
    EncoderConfig c = SmallConfig();
    c.family = static_cast<Family>(seed % 3);
    c.shared_weights = c.family != Family::kUnif && seed % 2 == 0;
    const CodeSearchModel model(c, vocab, seed);
    const SnippetIndex index = BuildIndex(model, vocab, pairs);
    const QCPair& probe = pairs[seed % pairs.size()];
    const auto hits = Query(index, model, vocab, probe.question, pairs.size());
    ASSERT_EQ(hits.size(), pairs.size());
    const TokenSequence q = EncodeSequence(
        vocab, TokenizeQuestion(probe.question), c.max_len_question);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (i > 0) {
        ASSERT_TRUE(hits[i - 1].score > hits[i].score ||
                    (hits[i - 1].score == hits[i].score &&
                     hits[i - 1].pair_id < hits[i].pair_id));
      }
      const auto it =
          std::find_if(pairs.begin(), pairs.end(), [&](const QCPair& p) {
            return p.id == hits[i].pair_id;
          });
      ASSERT_NE(it, pairs.end());
      const TokenSequence code = EncodeSequence(
          vocab, TokenizeCode(it->code), c.max_len_code);
      EXPECT_NEAR(hits[i].score, model.Score(q, code), 1e-6);
    }
  }
}

TEST(QueryTest, MemorizedQuestionFindsItsSnippet) {
  const testing_util::OverfitFixture f;
  CodeSearchModel model(f.config, f.vocab, 1);
  testing_util::Memorize(model, f, 1);
  const auto& pairs = f.pairs;
  const auto& vocab = f.vocab;
  const SnippetIndex index = BuildIndex(model, vocab, pairs);
  for (const QCPair& p : pairs) {
    const auto hits = Query(index, model, vocab, p.question, 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].pair_id, p.id);
  }
}

TEST(IndexFileTest, RoundTrip) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 5);
  const SnippetIndex index = BuildIndex(model, vocab, pairs);
  const std::string bytes = SerializeIndex(index);
  EXPECT_EQ(bytes.substr(0, 4), "CNCI");
  EXPECT_EQ(ParseIndex(bytes, "mem"), index);

  const auto path = std::filesystem::path(::testing::TempDir()) / "t.cnci";
  SaveIndex(path, index);
  EXPECT_EQ(LoadIndex(path), index);
  std::filesystem::remove(path);
}

TEST(IndexFileTest, CorruptInputs) {
  const auto pairs = SmallCorpus();
  const Vocabulary vocab = Vocabulary::Build(pairs, 1);
  const CodeSearchModel model(SmallConfig(), vocab, 5);
  const std::string bytes = SerializeIndex(BuildIndex(model, vocab, pairs));
  EXPECT_THROW(ParseIndex("XXXX" + bytes.substr(4), "m"), DataError);
  EXPECT_THROW(ParseIndex(bytes.substr(0, bytes.size() - 3), "m"), DataError);
  EXPECT_THROW(ParseIndex(bytes + "x", "m"), DataError);
  std::string version = bytes;
  version[4] = 2;
  EXPECT_THROW(ParseIndex(version, "m"), DataError);
}

}  // namespace
}  // namespace codesearch
