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

#include "codesearch/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "codesearch/binary_io.h"
#include "codesearch/eval.h"
#include "codesearch/grad_check.h"
#include "codesearch/kernels.h"
#include "codesearch/rng.h"
#include "codesearch/synthetic.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "overfit_fixture.h"
#include "test_util.h"

namespace codesearch {
namespace {

using testing_util::Memorize;
using testing_util::MemorizeResult;
using testing_util::OverfitFixture;
using testing_util::RandomSequence;
using testing_util::Seq;
using testing_util::TestVocab;

std::vector<EncodedPair> RandomPairs(std::size_t n, std::size_t vocab,
                                     Rng& rng, std::size_t q_len = 6,
                                     std::size_t c_len = 8) {
  std::vector<EncodedPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"p" + std::to_string(i), RandomSequence(rng, q_len, vocab),
                   RandomSequence(rng, c_len, vocab)});
  }
  return out;
}

std::vector<std::vector<double>> Snapshot(CodeSearchModel& model) {
  std::vector<std::vector<double>> out;
  for (Parameter* p : model.Parameters()) out.push_back(p->value.data);
  return out;
}

EncoderConfig SmallConfig(Family family, bool shared, bool bn) {
  EncoderConfig c;
  c.family = family;
  c.shared_weights = shared;
  c.batch_norm = bn;
  c.num_filters = 5;
  c.embed_dim = 3;
  c.max_len_question = 6;
  c.max_len_code = 8;
  return c;
}

std::vector<EncoderConfig> AllConfigs() {
  std::vector<EncoderConfig> out;
  for (Family f : {Family::kEmbeddingBaseline, Family::kUnif, Family::kCnn}) {
    for (bool shared : {false, true}) {
      if (f == Family::kUnif && shared) continue;
      for (bool bn : {false, true}) out.push_back(SmallConfig(f, shared, bn));
    }
  }
  return out;
}

// The 32-pair generated fixture with a shared CNN (|F| = 64, d = 32).
TEST(SampleTripletsTest, TwoPairsForceTheNegative) {
  Rng rng(1);
  const auto pairs = RandomPairs(2, 10, rng);
  for (std::uint64_t epoch = 0; epoch < 5; ++epoch) {
    const auto t = SampleTriplets(pairs, epoch, 9);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].c_neg, pairs[1].code);
    EXPECT_EQ(t[1].c_neg, pairs[0].code);
    EXPECT_EQ(t[0].negative_id, "p1");
  }
}

TEST(SampleTripletsTest, DeterministicPerSeedAndEpoch) {
  Rng rng(2);
  const auto pairs = RandomPairs(20, 10, rng);
  auto negatives = [&](std::uint64_t epoch, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& t : SampleTriplets(pairs, epoch, seed)) {
      ids.push_back(t.negative_id);
    }
    return ids;
  };
  EXPECT_EQ(negatives(3, 4), negatives(3, 4));
  EXPECT_NE(negatives(3, 4), negatives(4, 4));
  EXPECT_NE(negatives(3, 4), negatives(3, 5));
}

TEST(SampleTripletsTest, SinglePairRejected) {
  Rng rng(3);
  EXPECT_THROW(SampleTriplets(RandomPairs(1, 10, rng), 0, 1),
               std::invalid_argument);
}

// With 11 pairs every other pair should be pair 0's negative with
// probability 1/10.
TEST(SampleTripletsTest, NegativesAreUniform) {
  Rng rng(4);
  const auto pairs = RandomPairs(11, 10, rng);
  std::map<std::string, int> counts;
  for (std::uint64_t epoch = 0; epoch < 1000; ++epoch) {
    const auto t = SampleTriplets(pairs, epoch, 12);
    for (const Triplet& x : t) ASSERT_NE(x.negative_id, x.pair_id);
    ++counts[t[0].negative_id];
  }
  ASSERT_EQ(counts.size(), 10u);
  for (const auto& [id, n] : counts) {
    EXPECT_NEAR(n / 1000.0, 0.1, 0.03) << id;
  }
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  Parameter p("w", Tensor({2}, {1.0, -2.0}));
  p.grad = Tensor({2}, {0.5, -0.25});
  Optimizer adam(OptimizerKind::kAdam, 0.1, {&p});
  EXPECT_TRUE(adam.Step());
  // The bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value.data[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value.data[1], -2.0 + 0.1 * 0.25 / (0.25 + 1e-8), 1e-15);
}

TEST(OptimizerTest, SgdStep) {
  Parameter p("w", Tensor({2}, {1.0, -2.0}));
  p.grad = Tensor({2}, {0.5, -0.25});
  Optimizer sgd(OptimizerKind::kSgd, 0.1, {&p});
  EXPECT_TRUE(sgd.Step());
  EXPECT_EQ(p.value.data, (std::vector<double>{1.0 - 0.05, -2.0 + 0.025}));
}

TEST(OptimizerTest, ZeroGradientIsNoStep) {
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    Parameter p("w", Tensor({3}, {1.0, 2.0, 3.0}));
    Optimizer opt(kind, 0.5, {&p});
    EXPECT_FALSE(opt.Step());
    EXPECT_EQ(p.value.data, (std::vector<double>{1.0, 2.0, 3.0}));
  }
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.margin = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig();
  c.patience = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  EXPECT_EQ(ParseOptimizer(OptimizerName(OptimizerKind::kSgd)),
            OptimizerKind::kSgd);
  EXPECT_THROW(ParseOptimizer("rmsprop"), std::invalid_argument);
}

// The hinge on cosine scores through the full model, for every family, with
// batch norm in train mode, against central differences.
TEST(TripletLossGradientTest, EndToEndMatchesFiniteDifferences) {
  const Vocabulary vocab = TestVocab(9);
  for (const EncoderConfig& c : AllConfigs()) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CodeSearchModel model(c, vocab, seed);
      Rng rng(seed + 50);
      for (Parameter* p : model.Parameters()) {
        for (double& v : p->value.data) v = rng.Uniform(-0.8, 0.8);
      }
      const auto pairs = RandomPairs(4, 9, rng);
      const auto triplets = SampleTriplets(pairs, seed, seed);
      std::vector<const Triplet*> batch;
      for (const auto& t : triplets) batch.push_back(&t);
      // Cosines are in [-1, 1], so a margin of 2.5 keeps every hinge active.
      const double margin = 2.5;
      auto loss = [&] {
        return TripletBatchLoss(model, batch, margin, Mode::kTrain, false);
      };
      model.ZeroGrad();
      TripletBatchLoss(model, batch, margin, Mode::kTrain, true);
      for (Parameter* p : model.Parameters()) {
        const std::vector<double> analytic = p->grad.data;
        EXPECT_LT(GradCheck(loss, p->value.data, analytic), 1e-4)
            << FamilyName(c.family) << " shared " << c.shared_weights
            << " bn " << c.batch_norm << " seed " << seed << " " << p->name;
      }
    }
  }
}

// Random models and triplets arranged so every triplet already clears a
// margin: an epoch then has zero loss and must leave every parameter alone.
TEST(TrainEpochPropertyTest, ZeroLossMeansNoParameterChange) {
  const Vocabulary vocab = TestVocab(15);
  const auto configs = AllConfigs();
  Rng rng(61);
  int cases = 0;
  while (cases < 100) {
    const EncoderConfig& c = configs[rng.Index(configs.size())];
    CodeSearchModel model(c, vocab, rng.NextU64());
    auto pairs = RandomPairs(2 + rng.Index(10), 15, rng);
    auto triplets = SampleTriplets(pairs, 0, rng.NextU64());
    TrainConfig tc;
    tc.batch_size = triplets.size();
    tc.optimizer = rng.Index(2) == 0 ? OptimizerKind::kAdam
                                     : OptimizerKind::kSgd;
    tc.learning_rate = 0.1;
    tc.seed = rng.NextU64();

    // Scores exactly as the single training batch will see them.
    std::vector<const Triplet*> batch;
    for (const auto& t : triplets) batch.push_back(&t);
    std::vector<const TokenSequence*> qs, cs;
    for (const auto& t : triplets) qs.push_back(&t.q);
    for (const auto& t : triplets) cs.push_back(&t.c_pos);
    for (const auto& t : triplets) cs.push_back(&t.c_neg);
    const Tensor q = model.Forward(Side::kQuestion, qs, Mode::kTrain, nullptr);
    const Tensor code = model.Forward(Side::kCode, cs, Mode::kTrain, nullptr);
    double min_gap = std::numeric_limits<double>::infinity();
    const std::size_t n = triplets.size();
    for (std::size_t i = 0; i < n; ++i) {
      double gap = kernels::Cosine(q.row(i), code.row(i)) -
                   kernels::Cosine(q.row(i), code.row(n + i));
      if (gap < 0) {
        std::swap(triplets[i].c_pos, triplets[i].c_neg);
        gap = -gap;
      }
      min_gap = std::min(min_gap, gap);
    }
    if (!(min_gap > 1e-6)) continue;
    tc.margin = min_gap / 2;

    const auto before = Snapshot(model);
    Optimizer opt(tc.optimizer, tc.learning_rate, model.TrainableParameters());
    EXPECT_EQ(TrainEpoch(model, triplets, tc, opt, 1), 0.0);
    EXPECT_EQ(Snapshot(model), before);
    ++cases;
  }
}

TEST(TrainEpochTest, ZeroLearningRateLeavesParameters) {
  Rng rng(5);
  CodeSearchModel model(SmallConfig(Family::kCnn, false, false), TestVocab(12),
                        5);
  const auto triplets = SampleTriplets(RandomPairs(20, 12, rng), 0, 5);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.margin = 0.5;
  tc.batch_size = 6;
  const auto before = Snapshot(model);
  Optimizer opt(tc.optimizer, 0.0, model.TrainableParameters());
  const double j = TrainEpoch(model, triplets, tc, opt, 1);
  EXPECT_EQ(Snapshot(model), before);
  EXPECT_GT(j, 0.0);
  EXPECT_NEAR(j, EvaluateLoss(model, triplets, tc.margin), 1e-12);
}

TEST(TrainEpochTest, EmptyTripletsRejected) {
  CodeSearchModel model(SmallConfig(Family::kCnn, false, false), TestVocab(12),
                        5);
  Optimizer opt(OptimizerKind::kAdam, 0.1, model.TrainableParameters());
  EXPECT_THROW(TrainEpoch(model, {}, TrainConfig(), opt, 1),
               std::invalid_argument);
}

TEST(TrainEpochTest, LossDropsOnGeneratedFixture) {
  OverfitFixture f;
  ASSERT_EQ(f.encoded.size(), 32u);
  CodeSearchModel model(f.config, f.vocab, 7);
  TrainConfig tc;
  tc.seed = 7;
  Optimizer opt(tc.optimizer, tc.learning_rate, model.TrainableParameters());
  double first = 0, last = 0;
  for (std::uint64_t epoch = 1; epoch <= 50; ++epoch) {
    const auto triplets = SampleTriplets(f.encoded, epoch, tc.seed);
    last = TrainEpoch(model, triplets, tc, opt, epoch);
    if (epoch == 1) first = last;
  }
  EXPECT_LT(last, first);
}

// Train until an epoch has zero loss; the model that produced that epoch's
// scores is the final one, and it must clear the margin on every triplet.
TEST(TrainEpochTest, ZeroLossMeansMarginHolds) {
  OverfitFixture f;
  CodeSearchModel model(f.config, f.vocab, 11);
  TrainConfig tc;
  tc.seed = 11;
  tc.learning_rate = 0.003;
  Optimizer opt(tc.optimizer, tc.learning_rate, model.TrainableParameters());
  std::vector<Triplet> triplets;
  double j = 1.0;
  for (std::uint64_t epoch = 1; epoch <= 300 && j > 0.0; ++epoch) {
    triplets = SampleTriplets(f.encoded, epoch, tc.seed);
    j = TrainEpoch(model, triplets, tc, opt, epoch);
  }
  ASSERT_EQ(j, 0.0);
  for (const Triplet& t : triplets) {
    EXPECT_GE(model.Score(t.q, t.c_pos) - model.Score(t.q, t.c_neg),
              tc.margin);
  }
}

TEST(FitTest, InfiniteFloorStopsAfterOneEpoch) {
  Rng rng(6);
  const auto pairs = RandomPairs(30, 12, rng);
  CodeSearchModel model(SmallConfig(Family::kCnn, true, false), TestVocab(12),
                        6);
  TrainConfig tc;
  tc.train_loss_floor = std::numeric_limits<double>::infinity();
  tc.dev_distractors = 10;
  const TrainReport r = Fit(model, pairs, pairs, pairs, tc);
  EXPECT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(r.stop_reason, StopReason::kLossFloor);
  EXPECT_EQ(r.best_epoch, 1u);
}

// With a zero learning rate the validation loss never improves after the
// first epoch.
TEST(FitTest, PatienceStopsWhenValidationLossStalls) {
  Rng rng(7);
  const auto pairs = RandomPairs(30, 12, rng);
  CodeSearchModel model(SmallConfig(Family::kCnn, true, false), TestVocab(12),
                        7);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.patience = 1;
  tc.dev_distractors = 10;
  const TrainReport r = Fit(model, pairs, pairs, pairs, tc);
  EXPECT_EQ(r.epochs.size(), 2u);
  EXPECT_EQ(r.stop_reason, StopReason::kPatience);
  EXPECT_EQ(r.epochs[0].val_loss, r.epochs[1].val_loss);
}

TEST(FitTest, MaxEpochs) {
  Rng rng(8);
  const auto pairs = RandomPairs(30, 12, rng);
  CodeSearchModel model(SmallConfig(Family::kCnn, true, false), TestVocab(12),
                        8);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.dev_distractors = 10;
  const TrainReport r = Fit(model, pairs, pairs, pairs, tc);
  EXPECT_EQ(r.epochs.size(), 3u);
  EXPECT_EQ(r.stop_reason, StopReason::kMaxEpochs);
}

TEST(OverfitTest, FixtureIsMemorized) {
  OverfitFixture f;
  CodeSearchModel model(f.config, f.vocab, 1);
  const MemorizeResult r = Memorize(model, f, 1);
  ASSERT_EQ(ExhaustiveLoss(model, f.encoded, f.config.margin), 0.0);
  EXPECT_LT(r.last_loss, 0.001);
  EvalOptions eo;
  eo.distractors = 10;
  eo.iterations = 20;
  const EvalSummary s = EvaluateModel(model, f.encoded, f.encoded, eo);
  EXPECT_EQ(s.mrr_mean, 1.0);
  EXPECT_EQ(s.topk_accuracy[0], 1.0);
}

TEST(ExhaustiveLossTest, MatchesAllTriplets) {
  Rng rng(10);
  const auto pairs = RandomPairs(6, 12, rng);
  CodeSearchModel model(SmallConfig(Family::kCnn, false, true), TestVocab(12),
                        10);
  std::vector<Triplet> all;
  for (const auto& p : pairs) {
    for (const auto& o : pairs) {
      if (p.id != o.id) all.push_back({p.question, p.code, o.code, p.id, o.id});
    }
  }
  EXPECT_NEAR(ExhaustiveLoss(model, pairs, 0.3),
              EvaluateLoss(model, all, 0.3), 1e-15);
}

TEST(FitTest, ReproducibleAndWritesCheckpoints) {
  Rng rng(9);
  const auto pairs = RandomPairs(30, 12, rng);
  const auto dir = std::filesystem::path(::testing::TempDir()) / "fit_ckpt";
  std::filesystem::remove_all(dir);
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.dev_distractors = 10;
  tc.learning_rate = 0.01;
  auto run = [&](const std::filesystem::path& out) {
    CodeSearchModel model(SmallConfig(Family::kCnn, false, true),
                          TestVocab(12), 9);
    FitOptions fo;
    fo.checkpoint_dir = out;
    const TrainReport r = Fit(model, pairs, pairs, pairs, tc, fo);
    return std::make_pair(ReportToJsonl(r), model.Serialize());
  };
  const auto a = run(dir);
  const auto b = run({});
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::filesystem::exists(dir / "best.cncm"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt-epoch1.cncm"));
  const std::string best = ReadFileBytes(dir / "best.cncm");
  EXPECT_EQ(best, a.second);
  std::filesystem::remove_all(dir);
}

TEST(ReportTest, JsonLines) {
  TrainReport r;
  r.epochs = {{1, 0.5, 0.25, 0.125}, {2, 0.0625, 0.5, 1.0}};
  const std::string text = ReportToJsonl(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first.at("epoch"), 1);
  EXPECT_EQ(first.at("train_loss"), 0.5);
  EXPECT_EQ(first.at("val_loss"), 0.25);
  EXPECT_EQ(first.at("dev_mrr"), 0.125);
}

}  // namespace
}  // namespace codesearch
