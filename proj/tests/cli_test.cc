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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "codesearch/binary_io.h"
#include "codesearch/corpus.h"
#include "codesearch/encoder.h"
#include "codesearch/search_index.h"
#include "codesearch/skipgram.h"
#include "codesearch/tensor.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "overfit_fixture.h"

namespace codesearch::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "codesearch");
  std::ostringstream out, err;
  Result r;
  r.code = Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Data(const std::string& name) {
  return (fs::path(CODESEARCH_TEST_DATA) / name).string();
}

// Fresh directory named after the running test.
fs::path Scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::path(::testing::TempDir()) / "cli" /
                       (std::string(info->test_suite_name()) + "." +
                        info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    files[e.path().filename().string()] = ReadFileBytes(e.path());
  }
  return files;
}

std::string Ingest(const fs::path& dir, const std::string& corpus) {
  const std::string vocab = (dir / "vocab.jsonl").string();
  const Result r = RunCli({"ingest", "--corpus", corpus, "--vocab", vocab});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  return vocab;
}

TEST(IngestTest, ThreePairs) {
  const fs::path dir = Scratch();
  const std::string vocab = (dir / "v.jsonl").string();
  const Result r = RunCli(
      {"ingest", "--corpus", Data("three_pairs.jsonl"), "--vocab", vocab});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out,
            "origin,pairs\ntrain_auto,2\nmanual_dev,1\nmanual_eval,0\n"
            "total,3\nvocabulary,11\n");
  // Only train_auto pairs feed the vocabulary; ties go lexicographically.
  const std::vector<std::string> expected = {
      "<pad>", "<unk>", "a", "items", "list", "1",
      "how", "reverse", "sort", "sorted", "to"};
  const Vocabulary loaded = Vocabulary::Load(vocab);
  std::vector<std::string> tokens;
  for (const auto& e : loaded.entries()) {
    tokens.push_back(e.token);
  }
  EXPECT_EQ(tokens, expected);
}

TEST(IngestTest, DuplicateIdIsNamed) {
  const fs::path dir = Scratch();
  const Result r = RunCli({"ingest", "--corpus", Data("duplicate_id.jsonl"),
                           "--vocab", (dir / "v.jsonl").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("duplicate id \"dup-7\""), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "v.jsonl"));
}

TEST(IngestTest, MalformedLineIsNumbered) {
  const fs::path dir = Scratch();
  const Result r = RunCli({"ingest", "--corpus", Data("malformed.jsonl"),
                           "--vocab", (dir / "v.jsonl").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("malformed.jsonl:3:"), std::string::npos) << r.err;
}

TEST(IngestTest, EmptyFileIsAnError) {
  const fs::path dir = Scratch();
  const Result r = RunCli({"ingest", "--corpus", Data("empty.jsonl"),
                           "--vocab", (dir / "v.jsonl").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("empty corpus"), std::string::npos) << r.err;
}

TEST(ExitCodeTest, UsageErrors) {
  const fs::path dir = Scratch();
  EXPECT_EQ(RunCli({}).code, kExitUsage);
  EXPECT_EQ(RunCli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(RunCli({"ingest", "--vocab", (dir / "v").string()}).code,
            kExitUsage);
  EXPECT_EQ(RunCli({"ingest", "--corpus", (dir / "missing.jsonl").string(),
                    "--vocab", (dir / "v").string()})
                .code,
            kExitUsage);
  EXPECT_EQ(RunCli({"search", "--top-k", "0"}).code, kExitUsage);
  EXPECT_EQ(RunCli({"train", "--family", "lstm", "--corpus",
                    Data("fixture_corpus.jsonl"), "--vocab",
                    Data("three_pairs.jsonl"), "--out",
                    (dir / "t").string()})
                .code,
            kExitUsage);
  EXPECT_EQ(RunCli({"--help"}).code, kExitOk);
}

TEST(ExitCodeTest, UnknownConfigKeyRejected) {
  const Result r = RunCli({"train", "--config", Data("unknown_key.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("unknown key \"learning_rat\""), std::string::npos)
      << r.err;
}

TEST(ExitCodeTest, NonFiniteEmbeddingsAreANumericFailure) {
  const fs::path dir = Scratch();
  const std::string corpus = Data("fixture_corpus.jsonl");
  const std::string vocab = Ingest(dir, corpus);
  const std::size_t n = Vocabulary::Load(vocab).size();
  SaveEmbeddings(dir / "nan.emb",
                 Tensor({n, 4}, std::numeric_limits<double>::quiet_NaN()));
  const Result r = RunCli({"train", "--corpus", corpus, "--vocab", vocab,
                           "--embeddings", (dir / "nan.emb").string(),
                           "--embed-dim", "4", "--filters", "4", "--out",
                           (dir / "t").string(), "--max-epochs", "2"});
  EXPECT_EQ(r.code, kExitNumeric) << r.err;
}

TEST(ForceTest, ExistingOutputsNeedForce) {
  const fs::path dir = Scratch();
  const std::string vocab = (dir / "v.jsonl").string();
  const std::vector<std::string> ingest = {
      "ingest", "--corpus", Data("three_pairs.jsonl"), "--vocab", vocab};
  ASSERT_EQ(RunCli(ingest).code, kExitOk);
  WriteFileBytes(vocab, "keep me");
  EXPECT_EQ(RunCli(ingest).code, kExitUsage);
  EXPECT_EQ(ReadFileBytes(vocab), "keep me");
  std::vector<std::string> forced = ingest;
  forced.push_back("--force");
  EXPECT_EQ(RunCli(forced).code, kExitOk);
  EXPECT_NE(ReadFileBytes(vocab), "keep me");

  fs::create_directories(dir / "run");
  WriteFileBytes(dir / "run" / "notes.txt", "mine");
  const Result r =
      RunCli({"train", "--corpus", Data("fixture_corpus.jsonl"), "--vocab",
              vocab, "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(Snapshot(dir / "run").size(), 1u);
}

TEST(CompareTest, TwoConfigsGiveTwoRows) {
  const fs::path dir = Scratch();
  const std::string corpus = Data("fixture_corpus.jsonl");
  const std::string vocab = Ingest(dir, corpus);
  const Result r = RunCli({"compare", "--corpus", corpus, "--vocab", vocab,
                           "--configs", Data("compare_baseline.json"),
                           Data("compare_cnn.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u) << r.out;
  EXPECT_EQ(rows[0], "model,mrr_mean,mrr_std,top1_mean,top1_std");
  EXPECT_TRUE(rows[1].starts_with("baseline,"));
  EXPECT_TRUE(rows[2].starts_with("shared_cnn,"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream fields(rows[i]);
    std::string field;
    std::getline(fields, field, ',');
    int numbers = 0;
    while (std::getline(fields, field, ',')) {
      const double v = std::stod(field);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      ++numbers;
    }
    EXPECT_EQ(numbers, 4);
  }
}

// A uniform random scorer ranks the gold code uniformly among 50, so the
// expected reciprocal rank is H_50 / 50.
TEST(EvalTest, RandomScoresMatchHarmonicOracle) {
  const fs::path dir = Scratch();
  const std::string corpus = (dir / "c.jsonl").string();
  ASSERT_EQ(RunCli({"synth", "--out", corpus, "--train", "100", "--dev",
                    "10", "--eval", "2000"})
                .code,
            kExitOk);
  const std::string vocab = Ingest(dir, corpus);
  const Result r =
      RunCli({"eval", "--corpus", corpus, "--vocab", vocab, "--random-scores",
              "--out", (dir / "eval").string(), "--seed", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  double harmonic = 0.0;
  for (int k = 1; k <= 50; ++k) harmonic += 1.0 / k;
  const auto summary =
      nlohmann::json::parse(ReadFileBytes(dir / "eval" / "summary.json"));
  EXPECT_EQ(summary["candidate_count"].get<int>(), 50);
  EXPECT_EQ(summary["eval_pairs"].get<int>(), 2000);
  EXPECT_NEAR(summary["mrr_mean"].get<double>(), harmonic / 50, 0.010);
  EXPECT_TRUE(fs::exists(dir / "eval" / "histogram.csv"));
}

TEST(SearchTest, MemorizedSnippetComesFirst) {
  const fs::path dir = Scratch();
  const testing_util::OverfitFixture f;
  CodeSearchModel model(f.config, f.vocab, 1);
  testing_util::Memorize(model, f, 1);
  ASSERT_EQ(ExhaustiveLoss(model, f.encoded, f.config.margin), 0.0);
  const std::string corpus = (dir / "c.jsonl").string();
  const std::string vocab = (dir / "v.jsonl").string();
  const std::string ckpt = (dir / "m.cncm").string();
  const std::string index = (dir / "i.cnci").string();
  WriteCorpus(corpus, f.pairs);
  f.vocab.Save(vocab);
  model.Save(ckpt);
  ASSERT_EQ(RunCli({"index", "--corpus", corpus, "--vocab", vocab, "--model",
                    ckpt, "--out", index})
                .code,
            kExitOk);
  for (const QCPair& p : f.pairs) {
    const Result r =
        RunCli({"search", "--index", index, "--vocab", vocab, "--model", ckpt,
                "--query", p.question, "--top-k", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(r.out.starts_with("Q: " + p.question + "\n1. " + p.id +
                                  "  score "))
        << r.out;
    EXPECT_NE(r.out.find("\n3. "), std::string::npos);
    EXPECT_EQ(r.out.find("\n4. "), std::string::npos);
  }
}

TEST(SearchTest, EmptyQueryAndStaleIndex) {
  const fs::path dir = Scratch();
  const testing_util::OverfitFixture f;
  const std::string corpus = (dir / "c.jsonl").string();
  const std::string vocab = (dir / "v.jsonl").string();
  WriteCorpus(corpus, f.pairs);
  f.vocab.Save(vocab);
  CodeSearchModel(f.config, f.vocab, 1).Save(dir / "a.cncm");
  CodeSearchModel(f.config, f.vocab, 2).Save(dir / "b.cncm");
  const std::string index = (dir / "i.cnci").string();
  ASSERT_EQ(RunCli({"index", "--corpus", corpus, "--vocab", vocab, "--model",
                    (dir / "a.cncm").string(), "--out", index})
                .code,
            kExitOk);
  Result r = RunCli({"search", "--index", index, "--vocab", vocab, "--model",
                     (dir / "b.cncm").string(), "--query", "sort lines"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("stale index"), std::string::npos) << r.err;
  r = RunCli({"search", "--index", index, "--vocab", vocab, "--model",
              (dir / "a.cncm").string(), "--query", "?!"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("empty query"), std::string::npos) << r.err;
}

TEST(NeighborsTest, ListsTopK) {
  const fs::path dir = Scratch();
  const std::string corpus = Data("fixture_corpus.jsonl");
  const std::string vocab = Ingest(dir, corpus);
  const std::string emb = (dir / "w.emb").string();
  ASSERT_EQ(RunCli({"train-w2v", "--corpus", corpus, "--vocab", vocab,
                    "--out", emb, "--embed-dim", "8", "--epochs", "2"})
                .code,
            kExitOk);
  const Result r = RunCli({"neighbors", "--embeddings", emb, "--vocab", vocab,
                           "--token", "sort", "--top-k", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(r.out.find("\nsort,"), std::string::npos);
}

// Single-threaded runs with one seed produce the same bytes, rerun into the
// same output paths with --force.
TEST(DeterminismTest, TrainEvalIndexAreByteIdentical) {
  const fs::path dir = Scratch();
  const std::string corpus = Data("fixture_corpus.jsonl");
  const std::string vocab = Ingest(dir, corpus);
  const std::string out = (dir / "train").string();
  const std::vector<std::string> train = {
      "train", "--corpus", corpus, "--vocab", vocab, "--out", out,
      "--family", "cnn", "--shared", "--filters", "8", "--embed-dim", "8",
      "--max-epochs", "3", "--seed", "9", "--force"};
  ASSERT_EQ(RunCli(train).code, kExitOk);
  const auto first_train = Snapshot(out);
  ASSERT_EQ(RunCli(train).code, kExitOk);
  EXPECT_EQ(Snapshot(out), first_train);
  EXPECT_TRUE(first_train.contains("best.cncm"));
  EXPECT_TRUE(first_train.contains("report.jsonl"));

  const std::string ckpt = out + "/best.cncm";
  const std::vector<std::string> eval = {
      "eval", "--corpus", corpus, "--vocab", vocab, "--model", ckpt,
      "--out", (dir / "eval").string(), "--iterations", "3", "--seed", "9",
      "--force"};
  ASSERT_EQ(RunCli(eval).code, kExitOk);
  const auto first_eval = Snapshot(dir / "eval");
  ASSERT_EQ(RunCli(eval).code, kExitOk);
  EXPECT_EQ(Snapshot(dir / "eval"), first_eval);

  const std::string index = (dir / "i.cnci").string();
  const std::vector<std::string> build = {"index", "--corpus", corpus,
                                          "--vocab", vocab, "--model", ckpt,
                                          "--out", index, "--force"};
  ASSERT_EQ(RunCli(build).code, kExitOk);
  const std::string first_index = ReadFileBytes(index);
  ASSERT_EQ(RunCli(build).code, kExitOk);
  EXPECT_EQ(ReadFileBytes(index), first_index);
}

}  // namespace
}  // namespace codesearch::cli
