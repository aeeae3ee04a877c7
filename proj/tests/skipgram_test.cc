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

#include "codesearch/skipgram.h"

#include <algorithm>
#include <string>
#include <vector>

#include "codesearch/error.h"
#include "codesearch/kernels.h"
#include "codesearch/rng.h"
#include "gtest/gtest.h"

namespace codesearch {
namespace {

// Each question sentence holds "open file ... file open" between filler
// words, so the two tokens always co-occur and also share each other's
// contexts. Code sentences put "qqq" among fillers only; fillers mostly see
// other fillers.
std::vector<QCPair> CooccurrenceCorpus(std::size_t sentences) {
  Rng rng(2024);
  auto filler = [&] { return "w" + std::to_string(rng.Index(50)); };
  std::vector<QCPair> pairs;
  for (std::size_t i = 0; i < sentences / 2; ++i) {
    std::string q = filler() + " open file " + filler() + " file open " +
                    filler();
    std::string c;
    for (int k = 0; k < 3; ++k) c += filler() + " ";
    c += "qqq";
    for (int k = 0; k < 3; ++k) c += " " + filler();
    pairs.push_back({"p" + std::to_string(i), q, c, Origin::kTrainAuto});
  }
  return pairs;
}

double Cos(const Tensor& e, const Vocabulary& v, const char* a, const char* b) {
  return kernels::Cosine(e.row(static_cast<std::size_t>(v.Id(a))),
                         e.row(static_cast<std::size_t>(v.Id(b))));
}

class SkipGramTest : public ::testing::Test {
 protected:
  void SetUp() override {
    pairs_ = CooccurrenceCorpus(2000);
    vocab_ = Vocabulary::Build(pairs_, 1);
    config_.dim = 24;
    config_.window = 5;
    config_.negatives = 5;
    config_.epochs = 5;
    config_.seed = 42;
  }

  std::vector<QCPair> pairs_;
  Vocabulary vocab_;
  SkipGramConfig config_;
};

TEST_F(SkipGramTest, CooccurringTokensEndUpClose) {
  const SkipGramResult r = TrainSkipGram(pairs_, vocab_, config_);
  EXPECT_GT(Cos(r.embeddings, vocab_, "file", "open"),
            Cos(r.embeddings, vocab_, "file", "qqq"));

  const auto nn = NearestNeighbors(r.embeddings, vocab_, "file", 3);
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_TRUE(std::any_of(nn.begin(), nn.end(),
                          [](const auto& p) { return p.first == "open"; }));
  for (std::size_t i = 1; i < nn.size(); ++i) {
    EXPECT_GE(nn[i - 1].second, nn[i].second);
  }
}

TEST_F(SkipGramTest, LossDecreasesOverFirstEpochs) {
  // At the default rate the loss plateaus within one epoch and the later
  // epochs only show sampling noise; a smaller rate keeps it learning.
  config_.epochs = 3;
  config_.learning_rate = 0.005;
  const SkipGramResult r = TrainSkipGram(pairs_, vocab_, config_);
  ASSERT_EQ(r.epoch_loss.size(), 3u);
  EXPECT_LE(r.epoch_loss[1], r.epoch_loss[0]);
  EXPECT_LE(r.epoch_loss[2], r.epoch_loss[1]);
}

TEST_F(SkipGramTest, DeterministicAndPadZero) {
  const SkipGramResult a = TrainSkipGram(pairs_, vocab_, config_);
  const SkipGramResult b = TrainSkipGram(pairs_, vocab_, config_);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  for (double v : a.embeddings.row(kPadId)) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(a.embeddings.AllFinite());
}

TEST_F(SkipGramTest, ZeroEpochsReturnsInitialization) {
  config_.epochs = 0;
  const SkipGramResult r = TrainSkipGram(pairs_, vocab_, config_);
  EXPECT_EQ(r.embeddings,
            InitialEmbeddings(vocab_.size(), config_.dim, config_.seed));
  const double half = 0.5 / static_cast<double>(config_.dim);
  for (double v : r.embeddings.data) {
    EXPECT_LE(std::abs(v), half);
  }
}

TEST_F(SkipGramTest, RejectsBadConfig) {
  config_.negatives = vocab_.size();
  EXPECT_THROW(TrainSkipGram(pairs_, vocab_, config_), std::invalid_argument);
  config_.negatives = 5;
  config_.dim = 1;
  EXPECT_THROW(TrainSkipGram(pairs_, vocab_, config_), std::invalid_argument);
}

TEST(NearestNeighborsTest, DuplicateRowComesFirst) {
  std::vector<QCPair> pairs = {
      {"a", "alpha beta gamma delta", "x", Origin::kTrainAuto}};
  const Vocabulary v = Vocabulary::Build(pairs, 1);
  Rng rng(1);
  Tensor e({v.size(), 4});
  for (double& x : e.data) x = rng.Uniform(-1, 1);
  const auto a = static_cast<std::size_t>(v.Id("alpha"));
  const auto g = static_cast<std::size_t>(v.Id("gamma"));
  std::copy(e.row(a).begin(), e.row(a).end(), e.row(g).begin());
  const auto nn = NearestNeighbors(e, v, "alpha", 2);
  EXPECT_EQ(nn[0].first, "gamma");
  EXPECT_NEAR(nn[0].second, 1.0, 1e-15);
  EXPECT_TRUE(NearestNeighbors(e, v, "alpha", 0).empty());
  EXPECT_THROW(NearestNeighbors(e, v, "missing", 2), DataError);
}

TEST(EmbeddingFileTest, Float32RoundTrip) {
  const Tensor e = InitialEmbeddings(7, 5, 3);
  const std::string bytes = SerializeEmbeddings(e);
  EXPECT_EQ(bytes.substr(0, 4), "CNCW");
  EXPECT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 7 * 5 * 4);
  const Tensor back = ParseEmbeddings(bytes, "mem");
  ASSERT_EQ(back.shape, e.shape);
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_EQ(back.data[i], static_cast<double>(static_cast<float>(e.data[i])));
  }
  EXPECT_THROW(ParseEmbeddings(bytes.substr(0, bytes.size() - 1), "mem"),
               DataError);
  EXPECT_THROW(ParseEmbeddings("XXXX" + bytes.substr(4), "mem"), DataError);
}

}  // namespace
}  // namespace codesearch
