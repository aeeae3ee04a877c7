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

#ifndef CODESEARCH_EVAL_H_
#define CODESEARCH_EVAL_H_

// Distractor ranking, MRR and Top-k accuracy, and the repeated-sampling
// evaluation protocol with its first-position histogram.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codesearch/encoder.h"

namespace codesearch {

struct RankedResult {
  std::string pair_id;
  std::size_t rank = 1;
  std::size_t candidate_count = 1;
};

// 1 + #distractors scoring strictly higher + #distractors tying: the
// annotated candidate goes last among equal scores.
std::size_t RankOf(double annotated_score,
                   std::span<const double> distractor_scores);

RankedResult RankCandidates(const CodeSearchModel& model,
                            const std::string& pair_id, const TokenSequence& q,
                            const TokenSequence& annotated,
                            std::span<const TokenSequence> distractors);

// Both throw std::invalid_argument on empty input (and k = 0).
double Mrr(std::span<const RankedResult> results);
double TopKAccuracy(std::span<const RankedResult> results, std::size_t k);

// Scores eval query i against its own code or against pool entry j.
// Implementations are called concurrently and must not throw.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual double Annotated(std::size_t query) const = 0;
  virtual double Pool(std::size_t query, std::size_t candidate) const = 0;
};

// Cosine scores from infer-mode embeddings, computed once up front. Throws
// NumericError("degenerate embedding") if any embedding is all zeros.
class ModelScorer : public CandidateScorer {
 public:
  ModelScorer(const CodeSearchModel& model, std::span<const EncodedPair> eval,
              std::span<const EncodedPair> pool);
  double Annotated(std::size_t query) const override;
  double Pool(std::size_t query, std::size_t candidate) const override;

 private:
  std::size_t dim_;
  std::vector<double> questions_, answers_, pool_;
  std::vector<double> question_sq_, answer_sq_, pool_sq_;
};

// Independent uniform scores per (query, candidate), keyed by the seed.
class RandomScorer : public CandidateScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  double Annotated(std::size_t query) const override;
  double Pool(std::size_t query, std::size_t candidate) const override;

 private:
  std::uint64_t seed_;
};

class ConstantScorer : public CandidateScorer {
 public:
  double Annotated(std::size_t) const override { return 0.0; }
  double Pool(std::size_t, std::size_t) const override { return 0.0; }
};

struct EvalOptions {
  std::size_t distractors = 49;
  std::size_t iterations = 20;
  std::uint64_t seed = 1;
};

struct EvalSummary {
  std::size_t iterations = 0;
  std::size_t eval_pairs = 0;
  std::size_t candidate_count = 0;
  double mrr_mean = 0.0;
  // Population standard deviation of the per-iteration values.
  double mrr_std = 0.0;
  std::vector<double> mrr_per_iteration;
  // topk_accuracy[k - 1] for k = 1..candidate_count, averaged over
  // iterations.
  std::vector<double> topk_accuracy;
  double top1_std = 0.0;
  // histogram[p - 1] = how often the annotated snippet landed at position p,
  // pooled over all iterations.
  std::vector<std::size_t> histogram;

  bool operator==(const EvalSummary&) const = default;
};

// Aggregates one list of ranked results per iteration. All results must
// share one candidate_count.
EvalSummary Summarize(const std::vector<std::vector<RankedResult>>& iterations);

// For every iteration and eval pair, draws `distractors` distinct pool
// entries other than the pair itself (matched by id) from a stream keyed by
// (seed, iteration, pair id), and ranks the pair's own code among them. The
// pairs of one iteration are scored in parallel; the aggregation order is
// fixed, so the summary does not depend on the thread count. Throws
// std::invalid_argument when the pool has no more than `distractors`
// entries or there are no eval pairs.
EvalSummary EvaluateProtocol(const CandidateScorer& scorer,
                             std::span<const std::string> eval_ids,
                             std::span<const std::string> pool_ids,
                             const EvalOptions& options);

EvalSummary EvaluateModel(const CodeSearchModel& model,
                          std::span<const EncodedPair> eval,
                          std::span<const EncodedPair> pool,
                          const EvalOptions& options);

std::vector<std::string> PairIds(std::span<const EncodedPair> pairs);

std::string SummaryToJson(const EvalSummary& summary);
// "position,count" rows for positions 1..candidate_count.
std::string HistogramCsv(const EvalSummary& summary);

}  // namespace codesearch

#endif  // CODESEARCH_EVAL_H_
