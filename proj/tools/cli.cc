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

#include <omp.h>

#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "codesearch/binary_io.h"
#include "codesearch/corpus.h"
#include "codesearch/encoder.h"
#include "codesearch/error.h"
#include "codesearch/eval.h"
#include "codesearch/search_index.h"
#include "codesearch/skipgram.h"
#include "codesearch/synthetic.h"
#include "codesearch/trainer.h"
#include "json.hpp"
#include "run_config.h"

namespace codesearch::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Appliers = std::vector<std::function<void(RunConfig&)>>;

// Options shared by every subcommand; only one subcommand parses per run.
struct Common {
  std::string config;
  bool force = false;
  int threads = 1;
};

struct Env {
  std::ostream& out;
  std::ostream& err;
  bool force;
};

template <typename T, typename Apply>
void AddOption(CLI::App* app, Appliers& appliers, const std::string& flag,
               const std::string& help, Apply apply) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(flag, *value, help);
  appliers.push_back([opt, value, apply](RunConfig& c) {
    if (opt->count() > 0) apply(c, *value);
  });
}

template <typename Apply>
void AddFlag(CLI::App* app, Appliers& appliers, const std::string& flag,
             const std::string& help, Apply apply) {
  CLI::Option* opt = app->add_flag(flag, help);
  appliers.push_back([opt, apply](RunConfig& c) {
    if (opt->count() > 0) apply(c);
  });
}

void AddPath(CLI::App* app, Appliers& a, const std::string& flag,
             fs::path RunPaths::*member, const std::string& help) {
  AddOption<std::string>(app, a, flag, help,
                         [member](RunConfig& c, const std::string& v) {
                           c.paths.*member = v;
                         });
}

void AddSeed(CLI::App* app, Appliers& a) {
  AddOption<std::uint64_t>(
      app, a, "--seed", "Seed for every random stream",
      [](RunConfig& c, std::uint64_t v) { c.seed = v; });
}

void AddEncoderOptions(CLI::App* app, Appliers& a) {
  AddOption<std::string>(app, a, "--family",
                         "embedding_baseline, unif or cnn",
                         [](RunConfig& c, const std::string& v) {
                           c.encoder.family = ParseFamily(v);
                         });
  AddOption<std::size_t>(
      app, a, "--filters", "Number of convolution filters",
      [](RunConfig& c, std::size_t v) { c.encoder.num_filters = v; });
  AddOption<std::size_t>(
      app, a, "--window", "Convolution window size",
      [](RunConfig& c, std::size_t v) { c.encoder.window_size = v; });
  AddOption<std::size_t>(
      app, a, "--embed-dim", "Word embedding size",
      [](RunConfig& c, std::size_t v) { c.encoder.embed_dim = v; });
  AddOption<double>(app, a, "--margin", "Hinge loss margin",
                    [](RunConfig& c, double v) { c.encoder.margin = v; });
  AddFlag(app, a, "--shared", "One tower for questions and code",
          [](RunConfig& c) { c.encoder.shared_weights = true; });
  AddFlag(app, a, "--batch-norm", "Batch normalization in the towers",
          [](RunConfig& c) { c.encoder.batch_norm = true; });
  AddFlag(app, a, "--freeze-embeddings", "Keep word embeddings fixed",
          [](RunConfig& c) { c.encoder.freeze_embeddings = true; });
}

void AddTrainOptions(CLI::App* app, Appliers& a) {
  AddOption<std::size_t>(
      app, a, "--max-epochs", "Epoch limit",
      [](RunConfig& c, std::size_t v) { c.train.max_epochs = v; });
  AddOption<std::size_t>(
      app, a, "--patience", "Epochs without validation improvement",
      [](RunConfig& c, std::size_t v) { c.train.patience = v; });
  AddOption<std::size_t>(
      app, a, "--batch-size", "Triplets per minibatch",
      [](RunConfig& c, std::size_t v) { c.train.batch_size = v; });
  AddOption<double>(
      app, a, "--learning-rate", "Optimizer step size",
      [](RunConfig& c, double v) { c.train.learning_rate = v; });
  AddOption<std::string>(app, a, "--optimizer", "adam or sgd",
                         [](RunConfig& c, const std::string& v) {
                           c.train.optimizer = ParseOptimizer(v);
                         });
}

void AddEvalOptions(CLI::App* app, Appliers& a) {
  AddOption<std::size_t>(
      app, a, "--iterations", "Resampling iterations",
      [](RunConfig& c, std::size_t v) { c.eval.iterations = v; });
  AddOption<std::size_t>(
      app, a, "--distractors", "Distractors per query (default 49)",
      [](RunConfig& c, std::size_t v) { c.eval.distractors = v; });
}

// Input and output checks, run before any real work.

void RequireInput(const fs::path& path, const std::string& flag) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (!fs::exists(path)) {
    throw UsageError(flag + ": " + path.string() + " does not exist");
  }
}

void PrepareOutputFile(const fs::path& path, const std::string& flag,
                       bool force) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (fs::exists(path) && !force) {
    throw UsageError(path.string() +
                     " exists; pass --force to overwrite it");
  }
  if (fs::is_directory(path)) {
    throw UsageError(path.string() + " is a directory");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void PrepareOutputDir(const fs::path& path, const std::string& flag,
                      bool force) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (fs::exists(path)) {
    if (!fs::is_directory(path)) {
      throw UsageError(path.string() + " is not a directory");
    }
    if (!fs::is_empty(path) && !force) {
      throw UsageError(path.string() +
                       " is not empty; pass --force to overwrite");
    }
    // Epoch checkpoints of an earlier run would be mistaken for this one's.
    for (const auto& entry : fs::directory_iterator(path)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("ckpt-epoch") && name.ends_with(".cncm")) {
        fs::remove(entry.path());
      }
    }
  }
  fs::create_directories(path);
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<QCPair> ReadOrigin(const std::vector<QCPair>& pairs,
                               Origin origin) {
  std::vector<QCPair> out = FilterByOrigin(pairs, origin);
  if (out.empty()) {
    throw DataError("corpus has no " + std::string(OriginName(origin)) +
                    " pairs");
  }
  return out;
}

std::vector<EncodedPair> Encode(const std::vector<QCPair>& pairs,
                                const Vocabulary& vocab,
                                const EncoderConfig& config,
                                const std::string& what, std::ostream& err) {
  std::size_t dropped = 0;
  auto out = EncodePairs(pairs, vocab, config, &dropped);
  if (dropped > 0) {
    err << what << ": dropped " << dropped
        << " pairs with an empty question or code\n";
  }
  if (out.empty()) throw DataError(what + ": no usable pairs");
  return out;
}

// The corpus splits every training command works from.
struct Splits {
  std::vector<EncodedPair> train;
  std::vector<EncodedPair> validation;
  std::vector<EncodedPair> dev;
  std::vector<EncodedPair> pool;
  std::vector<EncodedPair> eval;
};

Splits LoadSplits(const RunConfig& c, const Vocabulary& vocab,
                  const std::vector<QCPair>& pairs, bool need_eval,
                  std::ostream& err) {
  Splits s;
  const auto train_auto = ReadOrigin(pairs, Origin::kTrainAuto);
  const CorpusSplit split = SplitTrainValidation(train_auto, c.seed);
  s.train = Encode(split.train, vocab, c.encoder, "train", err);
  s.validation =
      Encode(split.validation, vocab, c.encoder, "validation", err);
  s.dev = Encode(ReadOrigin(pairs, Origin::kManualDev), vocab, c.encoder,
                 "manual_dev", err);
  if (need_eval) {
    s.pool = Encode(train_auto, vocab, c.encoder, "pool", err);
    s.eval = Encode(ReadOrigin(pairs, Origin::kManualEval), vocab, c.encoder,
                    "manual_eval", err);
  }
  return s;
}

CodeSearchModel NewModel(const RunConfig& c, const Vocabulary& vocab) {
  CodeSearchModel model(c.encoder, vocab, c.seed);
  if (!c.paths.embeddings.empty()) {
    model.SetWordEmbeddings(LoadEmbeddings(c.paths.embeddings));
  }
  return model;
}

void Validate(const RunConfig& c) {
  c.encoder.Validate();
  c.train.Validate();
  if (c.eval.iterations == 0) {
    throw std::invalid_argument("iterations must be >= 1");
  }
}

std::string ReportSummaryJson(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["epochs_run"] = r.epochs.size();
  j["best_epoch"] = r.best_epoch;
  j["best_dev_mrr"] = r.best_dev_mrr;
  j["stop_reason"] = StopReasonName(r.stop_reason);
  return j.dump(2) + "\n";
}

// Commands.

void CmdIngest(const RunConfig& c, const Env& env) {
  RequireInput(c.paths.corpus, "--corpus");
  PrepareOutputFile(c.paths.vocab, "--vocab", env.force);
  const auto pairs = ReadCorpus(c.paths.corpus);
  const auto train = ReadOrigin(pairs, Origin::kTrainAuto);
  const Vocabulary vocab = Vocabulary::Build(train, c.min_count);
  vocab.Save(c.paths.vocab);
  const auto counts = CountByOrigin(pairs);
  env.out << "origin,pairs\n";
  for (Origin o :
       {Origin::kTrainAuto, Origin::kManualDev, Origin::kManualEval}) {
    const auto it = counts.find(o);
    env.out << OriginName(o) << "," << (it == counts.end() ? 0 : it->second)
            << "\n";
  }
  env.out << "total," << pairs.size() << "\n";
  env.out << "vocabulary," << vocab.size() << "\n";
}

void CmdSynth(const RunConfig& c, const SyntheticOptions& options,
              const Env& env) {
  PrepareOutputFile(c.paths.out, "--out", env.force);
  SyntheticOptions o = options;
  o.seed = c.seed;
  const auto pairs = SyntheticCorpus(o);
  WriteCorpus(c.paths.out, pairs);
  env.err << "wrote " << pairs.size() << " pairs ("
          << SyntheticCombinations(o) << " distinct combinations)\n";
}

void CmdTrainW2v(const RunConfig& c, const Env& env) {
  RequireInput(c.paths.corpus, "--corpus");
  RequireInput(c.paths.vocab, "--vocab");
  PrepareOutputFile(c.paths.out, "--out", env.force);
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const auto train =
      ReadOrigin(ReadCorpus(c.paths.corpus), Origin::kTrainAuto);
  const SkipGramResult r = TrainSkipGram(train, vocab, c.skipgram);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
    env.err << "skip-gram epoch " << e + 1 << " loss " << r.epoch_loss[e]
            << "\n";
  }
  SaveEmbeddings(c.paths.out, r.embeddings);
}

void CmdTrain(const RunConfig& c, const Env& env) {
  RequireInput(c.paths.corpus, "--corpus");
  RequireInput(c.paths.vocab, "--vocab");
  if (!c.paths.embeddings.empty()) {
    RequireInput(c.paths.embeddings, "--embeddings");
  }
  Validate(c);
  PrepareOutputDir(c.paths.out, "--out", env.force);
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const Splits s =
      LoadSplits(c, vocab, ReadCorpus(c.paths.corpus), false, env.err);
  CodeSearchModel model = NewModel(c, vocab);
  FitOptions fo;
  fo.checkpoint_dir = c.paths.out;
  fo.log = &env.err;
  const TrainReport r = Fit(model, s.train, s.validation, s.dev, c.train, fo);
  WriteFileBytes(c.paths.out / "report.jsonl", ReportToJsonl(r));
  WriteFileBytes(c.paths.out / "summary.json", ReportSummaryJson(r));
  WriteFileBytes(c.paths.out / "config.json", RunConfigToJson(c));
  env.out << "best_epoch " << r.best_epoch << " dev_mrr "
          << Fixed(r.best_dev_mrr) << " stop " << StopReasonName(r.stop_reason)
          << " checkpoint " << (c.paths.out / "best.cncm").string() << "\n";
}

void CmdEval(const RunConfig& c, bool random_scores, const Env& env) {
  RequireInput(c.paths.corpus, "--corpus");
  RequireInput(c.paths.vocab, "--vocab");
  if (!random_scores) RequireInput(c.paths.model, "--model");
  if (c.eval.iterations == 0) throw UsageError("iterations must be >= 1");
  PrepareOutputDir(c.paths.out, "--out", env.force);
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const auto pairs = ReadCorpus(c.paths.corpus);
  EvalSummary summary;
  if (random_scores) {
    const auto pool = Encode(ReadOrigin(pairs, Origin::kTrainAuto), vocab,
                             c.encoder, "pool", env.err);
    const auto eval = Encode(ReadOrigin(pairs, Origin::kManualEval), vocab,
                             c.encoder, "manual_eval", env.err);
    summary = EvaluateProtocol(RandomScorer(c.seed), PairIds(eval),
                               PairIds(pool), c.eval);
  } else {
    const CodeSearchModel model = CodeSearchModel::Load(c.paths.model, vocab);
    const auto pool = Encode(ReadOrigin(pairs, Origin::kTrainAuto), vocab,
                             model.config(), "pool", env.err);
    const auto eval = Encode(ReadOrigin(pairs, Origin::kManualEval), vocab,
                             model.config(), "manual_eval", env.err);
    summary = EvaluateModel(model, eval, pool, c.eval);
  }
  WriteFileBytes(c.paths.out / "summary.json", SummaryToJson(summary));
  WriteFileBytes(c.paths.out / "histogram.csv", HistogramCsv(summary));
  env.out << "mrr " << Fixed(summary.mrr_mean) << " +- "
          << Fixed(summary.mrr_std) << " top1 "
          << Fixed(summary.topk_accuracy.front()) << " +- "
          << Fixed(summary.top1_std) << " (" << summary.eval_pairs
          << " queries, " << summary.candidate_count << " candidates, "
          << summary.iterations << " iterations)\n";
}

void CmdIndex(const RunConfig& c, const Env& env) {
  RequireInput(c.paths.corpus, "--corpus");
  RequireInput(c.paths.vocab, "--vocab");
  RequireInput(c.paths.model, "--model");
  PrepareOutputFile(c.paths.out, "--out", env.force);
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const CodeSearchModel model = CodeSearchModel::Load(c.paths.model, vocab);
  std::size_t skipped = 0;
  const SnippetIndex index =
      BuildIndex(model, vocab, ReadCorpus(c.paths.corpus), &skipped);
  if (skipped > 0) {
    env.err << "skipped " << skipped << " snippets with no code tokens\n";
  }
  SaveIndex(c.paths.out, index);
  env.err << "indexed " << index.entries.size() << " snippets\n";
}

void CmdSearch(const RunConfig& c, const std::string& query, std::size_t k,
               const Env& env) {
  RequireInput(c.paths.index, "--index");
  RequireInput(c.paths.vocab, "--vocab");
  RequireInput(c.paths.model, "--model");
  if (query.empty()) throw UsageError("--query is required");
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const CodeSearchModel model = CodeSearchModel::Load(c.paths.model, vocab);
  const SnippetIndex index = LoadIndex(c.paths.index);
  const auto hits = Query(index, model, vocab, query, k);
  env.out << "Q: " << query << "\n";
  for (std::size_t i = 0; i < hits.size(); ++i) {
    env.out << i + 1 << ". " << hits[i].pair_id << "  score "
            << Fixed(hits[i].score) << "\n";
    std::istringstream lines(hits[i].code);
    std::string line;
    while (std::getline(lines, line)) env.out << "    " << line << "\n";
  }
}

void CmdCompare(const RunConfig& base, const Appliers& appliers,
                const std::vector<std::string>& configs, const Env& env) {
  RequireInput(base.paths.corpus, "--corpus");
  RequireInput(base.paths.vocab, "--vocab");
  if (configs.empty()) throw UsageError("--configs needs at least one file");
  std::vector<RunConfig> runs;
  for (const std::string& file : configs) {
    RequireInput(file, "--configs");
    RunConfig rc;
    try {
      rc = LoadRunConfig(file);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    for (const auto& apply : appliers) apply(rc);
    if (rc.name.empty()) rc.name = fs::path(file).stem().string();
    rc.paths.corpus = base.paths.corpus;
    rc.paths.vocab = base.paths.vocab;
    if (!base.paths.embeddings.empty()) {
      rc.paths.embeddings = base.paths.embeddings;
    }
    if (!rc.paths.embeddings.empty()) {
      RequireInput(rc.paths.embeddings, "embeddings");
    }
    rc.Sync();
    Validate(rc);
    runs.push_back(std::move(rc));
  }
  if (!base.paths.out.empty()) {
    PrepareOutputFile(base.paths.out, "--out", env.force);
  }
  const Vocabulary vocab = Vocabulary::Load(base.paths.vocab);
  const auto pairs = ReadCorpus(base.paths.corpus);

  std::string csv = "model,mrr_mean,mrr_std,top1_mean,top1_std\n";
  for (const RunConfig& rc : runs) {
    env.err << "== " << rc.name << "\n";
    const Splits s = LoadSplits(rc, vocab, pairs, true, env.err);
    CodeSearchModel model = NewModel(rc, vocab);
    FitOptions fo;
    fo.log = &env.err;
    Fit(model, s.train, s.validation, s.dev, rc.train, fo);
    const EvalSummary e = EvaluateModel(model, s.eval, s.pool, rc.eval);
    csv += rc.name + "," + Fixed(e.mrr_mean, 6) + "," + Fixed(e.mrr_std, 6) +
           "," + Fixed(e.topk_accuracy.front(), 6) + "," +
           Fixed(e.top1_std, 6) + "\n";
  }
  if (base.paths.out.empty()) {
    env.out << csv;
  } else {
    WriteFileBytes(base.paths.out, csv);
  }
}

void CmdNeighbors(const RunConfig& c, const std::string& token,
                  std::size_t k, const Env& env) {
  RequireInput(c.paths.embeddings, "--embeddings");
  RequireInput(c.paths.vocab, "--vocab");
  const Vocabulary vocab = Vocabulary::Load(c.paths.vocab);
  const Tensor table = LoadEmbeddings(c.paths.embeddings);
  env.out << "token,cosine\n";
  for (const auto& [t, s] : NearestNeighbors(table, vocab, token, k)) {
    env.out << t << "," << Fixed(s) << "\n";
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Neural code search: train, evaluate and query encoders"};
  app.require_subcommand(1);
  Common common;
  std::map<CLI::App*, Appliers> appliers;

  auto command = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config, "JSON run configuration");
    sub->add_flag("--force", common.force, "Overwrite existing outputs");
    sub->add_option("--threads", common.threads, "OpenMP threads (default 1)")
        ->check(CLI::PositiveNumber);
    AddSeed(sub, appliers[sub]);
    return sub;
  };

  CLI::App* ingest = command("ingest", "Build the vocabulary of a corpus");
  AddPath(ingest, appliers[ingest], "--corpus", &RunPaths::corpus,
          "JSONL corpus");
  AddPath(ingest, appliers[ingest], "--vocab", &RunPaths::vocab,
          "Vocabulary to write");
  AddOption<std::size_t>(ingest, appliers[ingest], "--min-count",
                         "Minimum token count",
                         [](RunConfig& c, std::size_t v) { c.min_count = v; });

  SyntheticOptions synth_options;
  CLI::App* synth = command("synth", "Write a generated corpus");
  AddPath(synth, appliers[synth], "--out", &RunPaths::out, "JSONL to write");
  synth->add_option("--train", synth_options.train, "train_auto pairs");
  synth->add_option("--dev", synth_options.dev, "manual_dev pairs");
  synth->add_option("--eval", synth_options.eval, "manual_eval pairs");
  synth->add_option("--objects", synth_options.objects, "Object inventory");
  synth->add_option("--verbs", synth_options.verbs, "Verb inventory");
  synth->add_option("--nouns", synth_options.nouns, "Noun inventory");
  synth->add_option("--min-chain", synth_options.min_chain,
                    "Shortest operation chain");
  synth->add_option("--max-chain", synth_options.max_chain,
                    "Longest operation chain");

  CLI::App* w2v = command("train-w2v", "Train skip-gram word embeddings");
  AddPath(w2v, appliers[w2v], "--corpus", &RunPaths::corpus, "JSONL corpus");
  AddPath(w2v, appliers[w2v], "--vocab", &RunPaths::vocab, "Vocabulary");
  AddPath(w2v, appliers[w2v], "--out", &RunPaths::out, "Embeddings to write");
  AddOption<std::size_t>(
      w2v, appliers[w2v], "--embed-dim", "Embedding size",
      [](RunConfig& c, std::size_t v) { c.encoder.embed_dim = v; });
  AddOption<std::size_t>(
      w2v, appliers[w2v], "--epochs", "Passes over the corpus",
      [](RunConfig& c, std::size_t v) { c.skipgram.epochs = v; });
  AddOption<std::size_t>(
      w2v, appliers[w2v], "--window", "Context window",
      [](RunConfig& c, std::size_t v) { c.skipgram.window = v; });
  AddOption<std::size_t>(
      w2v, appliers[w2v], "--negatives", "Negative samples per context",
      [](RunConfig& c, std::size_t v) { c.skipgram.negatives = v; });

  CLI::App* train = command("train", "Train an encoder");
  AddPath(train, appliers[train], "--corpus", &RunPaths::corpus,
          "JSONL corpus");
  AddPath(train, appliers[train], "--vocab", &RunPaths::vocab, "Vocabulary");
  AddPath(train, appliers[train], "--embeddings", &RunPaths::embeddings,
          "Initial word embeddings");
  AddPath(train, appliers[train], "--out", &RunPaths::out,
          "Directory for checkpoints and reports");
  AddEncoderOptions(train, appliers[train]);
  AddTrainOptions(train, appliers[train]);

  bool random_scores = false;
  CLI::App* eval = command("eval", "Evaluate on the manual_eval pairs");
  AddPath(eval, appliers[eval], "--corpus", &RunPaths::corpus, "JSONL corpus");
  AddPath(eval, appliers[eval], "--vocab", &RunPaths::vocab, "Vocabulary");
  AddPath(eval, appliers[eval], "--model", &RunPaths::model, "Checkpoint");
  AddPath(eval, appliers[eval], "--out", &RunPaths::out,
          "Directory for summary.json and histogram.csv");
  eval->add_flag("--random-scores", random_scores,
                 "Score candidates uniformly at random instead of a model");
  AddEvalOptions(eval, appliers[eval]);

  CLI::App* index = command("index", "Embed every snippet of a corpus");
  AddPath(index, appliers[index], "--corpus", &RunPaths::corpus,
          "JSONL corpus");
  AddPath(index, appliers[index], "--vocab", &RunPaths::vocab, "Vocabulary");
  AddPath(index, appliers[index], "--model", &RunPaths::model, "Checkpoint");
  AddPath(index, appliers[index], "--out", &RunPaths::out, "Index to write");

  std::string query;
  std::size_t top_k = 5;
  CLI::App* search = command("search", "Query an index");
  AddPath(search, appliers[search], "--index", &RunPaths::index, "Index");
  AddPath(search, appliers[search], "--vocab", &RunPaths::vocab, "Vocabulary");
  AddPath(search, appliers[search], "--model", &RunPaths::model,
          "Checkpoint that built the index");
  search->add_option("--query", query, "Natural-language query");
  search->add_option("--top-k", top_k, "Results to print")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> configs;
  CLI::App* compare = command("compare", "Train and evaluate several configs");
  AddPath(compare, appliers[compare], "--corpus", &RunPaths::corpus,
          "JSONL corpus");
  AddPath(compare, appliers[compare], "--vocab", &RunPaths::vocab,
          "Vocabulary");
  AddPath(compare, appliers[compare], "--embeddings", &RunPaths::embeddings,
          "Initial word embeddings for every config");
  AddPath(compare, appliers[compare], "--out", &RunPaths::out,
          "CSV to write (default standard output)");
  compare->add_option("--configs", configs, "Run configuration files")
      ->expected(1, -1);
  AddEvalOptions(compare, appliers[compare]);

  std::string token;
  std::size_t neighbors_k = 10;
  CLI::App* neighbors = command("neighbors", "Nearest words by embedding");
  AddPath(neighbors, appliers[neighbors], "--embeddings",
          &RunPaths::embeddings, "Embeddings");
  AddPath(neighbors, appliers[neighbors], "--vocab", &RunPaths::vocab,
          "Vocabulary");
  neighbors->add_option("--token", token, "Query token")->required();
  neighbors->add_option("--top-k", neighbors_k, "Neighbors to print")
      ->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Env env{out, err, common.force};
  try {
    omp_set_num_threads(common.threads);
    RunConfig c;
    if (!common.config.empty()) {
      RequireInput(common.config, "--config");
      try {
        c = LoadRunConfig(common.config);
      } catch (const DataError& e) {
        throw UsageError(e.what());
      }
    }
    // Compare also applies the flags to each config it lists.
    for (const auto& apply : appliers[sub]) apply(c);
    c.Sync();

    if (sub == ingest) {
      CmdIngest(c, env);
    } else if (sub == synth) {
      CmdSynth(c, synth_options, env);
    } else if (sub == w2v) {
      CmdTrainW2v(c, env);
    } else if (sub == train) {
      CmdTrain(c, env);
    } else if (sub == eval) {
      CmdEval(c, random_scores, env);
    } else if (sub == index) {
      CmdIndex(c, env);
    } else if (sub == search) {
      CmdSearch(c, query, top_k, env);
    } else if (sub == compare) {
      CmdCompare(c, appliers[sub], configs, env);
    } else if (sub == neighbors) {
      CmdNeighbors(c, token, neighbors_k, env);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace codesearch::cli
