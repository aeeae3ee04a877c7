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
#include <cmath>
#include <stdexcept>

#include "codesearch/binary_io.h"
#include "codesearch/error.h"
#include "codesearch/kernels.h"
#include "codesearch/rng.h"

namespace codesearch {
namespace {

constexpr std::uint32_t kEmbeddingVersion = 1;

// log(1 + exp(-x)), stable for large |x|.
double SoftplusNeg(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Draws ids proportionally to count^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab) {
    cumulative_.reserve(vocab.size());
    double total = 0.0;
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      total += std::pow(
          static_cast<double>(vocab.Count(static_cast<std::int32_t>(id))),
          0.75);
      cumulative_.push_back(total);
    }
    if (total <= 0.0) throw DataError("vocabulary has no token counts");
  }

  std::int32_t Draw(Rng& rng) const {
    const double u = rng.Uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::int32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

Tensor InitialEmbeddings(std::size_t vocab_size, std::size_t dim,
                         std::uint64_t seed) {
  Tensor t({vocab_size, dim});
  Rng rng(DeriveSeed(seed, 0xe3bedull));
  const double half = 0.5 / static_cast<double>(dim);
  for (double& v : t.data) v = rng.Uniform(-half, half);
  std::fill(t.data.begin(), t.data.begin() + static_cast<std::ptrdiff_t>(dim),
            0.0);
  return t;
}

std::vector<std::vector<std::int32_t>> SkipGramSentences(
    std::span<const QCPair> pairs, const Vocabulary& vocab) {
  std::vector<std::vector<std::int32_t>> sentences;
  sentences.reserve(pairs.size() * 2);
  auto add = [&](const std::vector<std::string>& tokens) {
    if (tokens.empty()) return;
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.Id(t));
    sentences.push_back(std::move(ids));
  };
  for (const QCPair& p : pairs) {
    add(TokenizeQuestion(p.question));
    add(TokenizeCode(p.code));
  }
  return sentences;
}

SkipGramResult TrainSkipGram(std::span<const QCPair> pairs,
                             const Vocabulary& vocab,
                             const SkipGramConfig& config) {
  if (config.dim < 2) throw std::invalid_argument("skip-gram dim must be >= 2");
  if (config.window < 1) {
    throw std::invalid_argument("skip-gram window must be >= 1");
  }
  if (config.negatives < 1) {
    throw std::invalid_argument("skip-gram needs at least one negative");
  }
  if (vocab.size() < config.negatives + 2) {
    throw std::invalid_argument(
        "vocabulary of " + std::to_string(vocab.size()) +
        " tokens is too small for " + std::to_string(config.negatives) +
        " negatives");
  }

  const std::size_t d = config.dim;
  SkipGramResult result{InitialEmbeddings(vocab.size(), d, config.seed), {}};
  if (config.epochs == 0) return result;

  const auto sentences = SkipGramSentences(pairs, vocab);
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) total_tokens += s.size();
  const double total_work =
      static_cast<double>(total_tokens) * static_cast<double>(config.epochs);

  const NegativeSampler sampler(vocab);
  Rng rng(DeriveSeed(config.seed, 0x5169ull));
  std::vector<double>& in = result.embeddings.data;
  std::vector<double> out(in.size(), 0.0);
  std::vector<double> grad_in(d);
  std::size_t processed = 0;
  const auto w = static_cast<std::ptrdiff_t>(config.window);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t scored = 0;
    for (const auto& sentence : sentences) {
      const auto len = static_cast<std::ptrdiff_t>(sentence.size());
      for (std::ptrdiff_t pos = 0; pos < len; ++pos, ++processed) {
        const double progress = static_cast<double>(processed) / total_work;
        const double lr =
            config.learning_rate * std::max(1e-4, 1.0 - progress);
        double* center =
            in.data() + static_cast<std::size_t>(sentence[pos]) * d;
        for (std::ptrdiff_t ctx = std::max<std::ptrdiff_t>(0, pos - w);
             ctx <= std::min(len - 1, pos + w); ++ctx) {
          if (ctx == pos) continue;
          const std::int32_t context = sentence[ctx];
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (std::size_t k = 0; k <= config.negatives; ++k) {
            std::int32_t target = context;
            double label = 1.0;
            if (k > 0) {
              target = sampler.Draw(rng);
              if (target == context) continue;
              label = 0.0;
            }
            double* o = out.data() + static_cast<std::size_t>(target) * d;
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += center[c] * o[c];
            loss += label > 0 ? SoftplusNeg(dot) : SoftplusNeg(-dot);
            const double g = (label - Sigmoid(dot)) * lr;
            for (std::size_t c = 0; c < d; ++c) {
              grad_in[c] += g * o[c];
              o[c] += g * center[c];
            }
          }
          for (std::size_t c = 0; c < d; ++c) center[c] += grad_in[c];
          ++scored;
        }
      }
    }
    result.epoch_loss.push_back(scored ? loss / static_cast<double>(scored)
                                       : 0.0);
  }
  std::fill(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
  if (!result.embeddings.AllFinite()) {
    throw NumericError("skip-gram training diverged (non-finite embedding)");
  }
  return result;
}

std::vector<std::pair<std::string, double>> NearestNeighbors(
    const Tensor& embeddings, const Vocabulary& vocab, std::string_view token,
    std::size_t k) {
  const auto id = vocab.Find(token);
  if (!id || *id == kPadId || *id == kUnkId) {
    throw DataError("token \"" + std::string(token) + "\" not in vocabulary");
  }
  if (embeddings.rank() != 2 || embeddings.dim(0) != vocab.size()) {
    throw std::invalid_argument("embedding table does not match vocabulary");
  }
  if (k >= vocab.size()) {
    throw std::invalid_argument("k must be smaller than the vocabulary");
  }
  std::vector<std::pair<std::string, double>> scored;
  if (k == 0) return scored;
  const auto query = embeddings.row(static_cast<std::size_t>(*id));
  const double nq = kernels::Norm(query);
  for (std::size_t other = 2; other < vocab.size(); ++other) {
    if (other == static_cast<std::size_t>(*id)) continue;
    const auto row = embeddings.row(other);
    const double nr = kernels::Norm(row);
    const double cos =
        (nq == 0.0 || nr == 0.0) ? 0.0 : kernels::Dot(query, row) / (nq * nr);
    scored.emplace_back(vocab.Token(static_cast<std::int32_t>(other)), cos);
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(),
                    scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  scored.resize(keep);
  return scored;
}

std::string SerializeEmbeddings(const Tensor& embeddings) {
  if (embeddings.rank() != 2) {
    throw std::invalid_argument("embeddings must be a matrix");
  }
  ByteWriter w;
  w.Bytes("CNCW");
  w.U32(kEmbeddingVersion);
  w.U64(embeddings.dim(0));
  w.U64(embeddings.dim(1));
  for (double v : embeddings.data) w.F32(static_cast<float>(v));
  return w.Take();
}

Tensor ParseEmbeddings(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.ExpectMagic("CNCW");
  const std::uint32_t version = r.U32();
  if (version != kEmbeddingVersion) {
    throw DataError(source + ": unsupported embedding version " +
                    std::to_string(version));
  }
  const std::uint64_t rows = r.U64();
  const std::uint64_t dim = r.U64();
  if (dim == 0 || rows > r.remaining() / 4 / dim) {
    throw DataError(source + ": embedding header does not match file size");
  }
  Tensor t({rows, dim});
  for (double& v : t.data) v = r.F32();
  if (!r.AtEnd()) throw DataError(source + ": trailing bytes");
  return t;
}

void SaveEmbeddings(const std::filesystem::path& path,
                    const Tensor& embeddings) {
  WriteFileBytes(path, SerializeEmbeddings(embeddings));
}

Tensor LoadEmbeddings(const std::filesystem::path& path) {
  return ParseEmbeddings(ReadFileBytes(path), path.string());
}

}  // namespace codesearch
