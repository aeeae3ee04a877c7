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

#include "codesearch/eval.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <unordered_map>

#include "codesearch/error.h"
#include "codesearch/kernels.h"
#include "codesearch/rng.h"
#include "json.hpp"

namespace codesearch {

std::size_t RankOf(double annotated_score,
                   std::span<const double> distractor_scores) {
  std::size_t rank = 1;
  for (double s : distractor_scores) {
    if (s >= annotated_score) ++rank;
  }
  return rank;
}

RankedResult RankCandidates(const CodeSearchModel& model,
                            const std::string& pair_id, const TokenSequence& q,
                            const TokenSequence& annotated,
                            std::span<const TokenSequence> distractors) {
  const std::vector<double> q_vec = model.EncodeQuestion(q);
  const double annotated_score =
      kernels::Cosine(q_vec, model.EncodeCode(annotated));
  std::vector<double> scores;
  scores.reserve(distractors.size());
  for (const TokenSequence& d : distractors) {
    scores.push_back(kernels::Cosine(q_vec, model.EncodeCode(d)));
  }
  return {pair_id, RankOf(annotated_score, scores), distractors.size() + 1};
}

double Mrr(std::span<const RankedResult> results) {
  if (results.empty()) throw std::invalid_argument("no ranked results");
  double sum = 0.0;
  for (const RankedResult& r : results) {
    sum += 1.0 / static_cast<double>(r.rank);
  }
  return sum / static_cast<double>(results.size());
}

double TopKAccuracy(std::span<const RankedResult> results, std::size_t k) {
  if (results.empty()) throw std::invalid_argument("no ranked results");
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::size_t hits = 0;
  for (const RankedResult& r : results) hits += r.rank <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

namespace {

// Row-major (n x dim) infer-mode embeddings of one side of `pairs`.
std::vector<double> EmbedAll(const CodeSearchModel& model,
                             std::span<const EncodedPair> pairs, Side side) {
  const std::size_t dim = model.output_dim();
  const std::size_t n = pairs.size();
  std::vector<double> out(n * dim);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const TokenSequence& seq =
          side == Side::kQuestion ? pairs[i].question : pairs[i].code;
      const std::vector<double> v = model.Encode(side, seq);
      std::copy(v.begin(), v.end(), out.begin() + i * dim);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> SquaredNorms(const std::vector<double>& rows,
                                 std::size_t dim) {
  std::vector<double> out(dim == 0 ? 0 : rows.size() / dim);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = kernels::Dot({rows.data() + i * dim, dim},
                          {rows.data() + i * dim, dim});
    if (!std::isfinite(out[i])) throw NumericError("non-finite embedding");
    if (out[i] == 0.0) throw NumericError("degenerate embedding");
  }
  return out;
}

// Same arithmetic as kernels::Cosine.
double CosineFromParts(const double* a, const double* b, std::size_t dim,
                       double aa, double bb) {
  const double c = kernels::Dot({a, dim}, {b, dim}) / std::sqrt(aa * bb);
  return std::clamp(c, -1.0, 1.0);
}

double UnitFromSeed(std::uint64_t seed) {
  return static_cast<double>(MixBits(seed) >> 11) * 0x1.0p-53;
}

// Floyd's algorithm: `k` distinct values from [0, n).
std::vector<std::size_t> SampleDistinct(Rng& rng, std::size_t n,
                                        std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = rng.Index(j + 1);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double PopulationStd(const std::vector<double>& v) {
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

ModelScorer::ModelScorer(const CodeSearchModel& model,
                         std::span<const EncodedPair> eval,
                         std::span<const EncodedPair> pool)
    : dim_(model.output_dim()),
      questions_(EmbedAll(model, eval, Side::kQuestion)),
      answers_(EmbedAll(model, eval, Side::kCode)),
      pool_(EmbedAll(model, pool, Side::kCode)),
      question_sq_(SquaredNorms(questions_, dim_)),
      answer_sq_(SquaredNorms(answers_, dim_)),
      pool_sq_(SquaredNorms(pool_, dim_)) {}

double ModelScorer::Annotated(std::size_t query) const {
  return CosineFromParts(questions_.data() + query * dim_,
                         answers_.data() + query * dim_, dim_,
                         question_sq_[query], answer_sq_[query]);
}

double ModelScorer::Pool(std::size_t query, std::size_t candidate) const {
  return CosineFromParts(questions_.data() + query * dim_,
                         pool_.data() + candidate * dim_, dim_,
                         question_sq_[query], pool_sq_[candidate]);
}

double RandomScorer::Annotated(std::size_t query) const {
  return UnitFromSeed(DeriveSeed(seed_, query, ~std::uint64_t{0}));
}

double RandomScorer::Pool(std::size_t query, std::size_t candidate) const {
  return UnitFromSeed(DeriveSeed(seed_, query, candidate));
}

EvalSummary Summarize(
    const std::vector<std::vector<RankedResult>>& iterations) {
  if (iterations.empty() || iterations.front().empty()) {
    throw std::invalid_argument("no ranked results");
  }
  EvalSummary s;
  s.iterations = iterations.size();
  s.eval_pairs = iterations.front().size();
  s.candidate_count = iterations.front().front().candidate_count;
  s.topk_accuracy.assign(s.candidate_count, 0.0);
  s.histogram.assign(s.candidate_count, 0);
  std::vector<double> top1;
  for (const auto& results : iterations) {
    s.mrr_per_iteration.push_back(Mrr(results));
    std::vector<std::size_t> at(s.candidate_count, 0);
    for (const RankedResult& r : results) {
      if (r.candidate_count != s.candidate_count || r.rank < 1 ||
          r.rank > r.candidate_count) {
        throw std::invalid_argument("inconsistent ranked results");
      }
      ++at[r.rank - 1];
      ++s.histogram[r.rank - 1];
    }
    std::size_t cumulative = 0;
    for (std::size_t k = 0; k < s.candidate_count; ++k) {
      cumulative += at[k];
      s.topk_accuracy[k] += static_cast<double>(cumulative) /
                            static_cast<double>(results.size());
    }
    top1.push_back(static_cast<double>(at[0]) /
                   static_cast<double>(results.size()));
  }
  for (double& v : s.topk_accuracy) v /= static_cast<double>(s.iterations);
  s.mrr_mean = Mean(s.mrr_per_iteration);
  s.mrr_std = PopulationStd(s.mrr_per_iteration);
  s.top1_std = PopulationStd(top1);
  return s;
}

EvalSummary EvaluateProtocol(const CandidateScorer& scorer,
                             std::span<const std::string> eval_ids,
                             std::span<const std::string> pool_ids,
                             const EvalOptions& options) {
  if (eval_ids.empty()) throw std::invalid_argument("no eval pairs");
  if (options.iterations == 0) {
    throw std::invalid_argument("iterations must be >= 1");
  }
  if (pool_ids.size() <= options.distractors) {
    throw std::invalid_argument(
        "distractor pool too small: " + std::to_string(pool_ids.size()) +
        " entries for " + std::to_string(options.distractors) +
        " distractors");
  }
  std::unordered_map<std::string, std::size_t> pool_index;
  for (std::size_t j = 0; j < pool_ids.size(); ++j) {
    pool_index.emplace(pool_ids[j], j);
  }
  constexpr std::size_t kAbsent = ~std::size_t{0};
  std::vector<std::size_t> own(eval_ids.size(), kAbsent);
  std::vector<std::uint64_t> id_hash(eval_ids.size());
  for (std::size_t i = 0; i < eval_ids.size(); ++i) {
    auto it = pool_index.find(eval_ids[i]);
    if (it != pool_index.end()) own[i] = it->second;
    id_hash[i] = HashString(eval_ids[i]);
  }

  const std::size_t k = options.distractors;
  std::vector<std::vector<RankedResult>> all(options.iterations);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::vector<std::size_t> ranks(eval_ids.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
      Rng rng(DeriveSeed(options.seed, it, id_hash[i]));
      const std::size_t available =
          pool_ids.size() - (own[i] == kAbsent ? 0 : 1);
      std::vector<double> scores;
      scores.reserve(k);
      for (std::size_t j : SampleDistinct(rng, available, k)) {
        if (own[i] != kAbsent && j >= own[i]) ++j;
        scores.push_back(scorer.Pool(i, j));
      }
      ranks[i] = RankOf(scorer.Annotated(i), scores);
    }
    all[it].reserve(eval_ids.size());
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
      all[it].push_back({eval_ids[i], ranks[i], k + 1});
    }
  }
  return Summarize(all);
}

std::vector<std::string> PairIds(std::span<const EncodedPair> pairs) {
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const EncodedPair& p : pairs) ids.push_back(p.id);
  return ids;
}

EvalSummary EvaluateModel(const CodeSearchModel& model,
                          std::span<const EncodedPair> eval,
                          std::span<const EncodedPair> pool,
                          const EvalOptions& options) {
  const ModelScorer scorer(model, eval, pool);
  return EvaluateProtocol(scorer, PairIds(eval), PairIds(pool), options);
}

std::string SummaryToJson(const EvalSummary& s) {
  nlohmann::ordered_json topk = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < s.topk_accuracy.size(); ++k) {
    topk[std::to_string(k + 1)] = s.topk_accuracy[k];
  }
  nlohmann::ordered_json j;
  j["iterations"] = s.iterations;
  j["eval_pairs"] = s.eval_pairs;
  j["candidate_count"] = s.candidate_count;
  j["mrr_mean"] = s.mrr_mean;
  j["mrr_std"] = s.mrr_std;
  j["mrr_per_iteration"] = s.mrr_per_iteration;
  j["top1_mean"] = s.topk_accuracy.empty() ? 0.0 : s.topk_accuracy[0];
  j["top1_std"] = s.top1_std;
  j["topk_accuracy"] = topk;
  j["histogram"] = s.histogram;
  return j.dump(2) + "\n";
}

std::string HistogramCsv(const EvalSummary& s) {
  std::string out = "position,count\n";
  for (std::size_t p = 0; p < s.histogram.size(); ++p) {
    out += std::to_string(p + 1) + "," + std::to_string(s.histogram[p]) + "\n";
  }
  return out;
}

}  // namespace codesearch
