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

#include "codesearch/encoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "codesearch/binary_io.h"
#include "codesearch/error.h"
#include "codesearch/rng.h"
#include "codesearch/skipgram.h"
#include "json.hpp"

namespace codesearch {

using nlohmann::json;

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kEmbeddingBaseline:
      return "embedding_baseline";
    case Family::kUnif:
      return "unif";
    case Family::kCnn:
      return "cnn";
  }
  return "?";
}

Family ParseFamily(std::string_view name) {
  if (name == "embedding_baseline") return Family::kEmbeddingBaseline;
  if (name == "unif") return Family::kUnif;
  if (name == "cnn") return Family::kCnn;
  throw std::invalid_argument("unknown encoder family \"" + std::string(name) +
                              "\"");
}

void EncoderConfig::Validate() const {
  if (family == Family::kUnif && shared_weights) {
    throw std::invalid_argument(
        "unif towers differ in structure and cannot share weights");
  }
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be > 0");
  if (embed_dim == 0) throw std::invalid_argument("embed_dim must be >= 1");
  if (max_len_question == 0 || max_len_code == 0) {
    throw std::invalid_argument("max lengths must be >= 1");
  }
  if (family == Family::kCnn && (num_filters == 0 || window_size == 0)) {
    throw std::invalid_argument("num_filters and window_size must be >= 1");
  }
}

std::string EncoderConfigToJson(const EncoderConfig& c) {
  json j = {{"family", FamilyName(c.family)},
            {"shared_weights", c.shared_weights},
            {"batch_norm", c.batch_norm},
            {"num_filters", c.num_filters},
            {"window_size", c.window_size},
            {"embed_dim", c.embed_dim},
            {"margin", c.margin},
            {"max_len_question", c.max_len_question},
            {"max_len_code", c.max_len_code},
            {"freeze_embeddings", c.freeze_embeddings}};
  return j.dump();
}

EncoderConfig EncoderConfigFromJson(std::string_view text) {
  EncoderConfig c;
  try {
    const json j = json::parse(text);
    for (const auto& [key, value] : j.items()) {
      if (key == "family") {
        c.family = ParseFamily(value.get<std::string>());
      } else if (key == "shared_weights") {
        c.shared_weights = value.get<bool>();
      } else if (key == "batch_norm") {
        c.batch_norm = value.get<bool>();
      } else if (key == "num_filters") {
        c.num_filters = value.get<std::size_t>();
      } else if (key == "window_size") {
        c.window_size = value.get<std::size_t>();
      } else if (key == "embed_dim") {
        c.embed_dim = value.get<std::size_t>();
      } else if (key == "margin") {
        c.margin = value.get<double>();
      } else if (key == "max_len_question") {
        c.max_len_question = value.get<std::size_t>();
      } else if (key == "max_len_code") {
        c.max_len_code = value.get<std::size_t>();
      } else if (key == "freeze_embeddings") {
        c.freeze_embeddings = value.get<bool>();
      } else {
        throw DataError("unknown encoder config key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad encoder config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return c;
}

struct CodeSearchModel::Tower {
  enum class Pool { kConv, kMax, kAvg, kAttention };

  Pool pool = Pool::kConv;
  std::shared_ptr<Parameter> embedding;
  std::shared_ptr<Parameter> filters;
  std::shared_ptr<Parameter> bias;
  std::shared_ptr<Parameter> attention;
  std::shared_ptr<kernels::BatchNormState> bn;
  std::string prefix;
};

namespace {

std::shared_ptr<Parameter> MakeEmbedding(const std::string& name,
                                         std::size_t vocab_size,
                                         std::size_t dim, std::uint64_t seed) {
  return std::make_shared<Parameter>(
      name,
      InitialEmbeddings(vocab_size, dim, DeriveSeed(seed, HashString(name))));
}

std::shared_ptr<Parameter> MakeFilters(const std::string& name,
                                       const EncoderConfig& c,
                                       std::uint64_t seed) {
  const double limit = std::sqrt(
      6.0 / static_cast<double>(c.window_size * c.embed_dim + c.num_filters));
  Tensor w({c.num_filters, c.window_size, c.embed_dim});
  Rng rng(DeriveSeed(seed, HashString(name)));
  for (double& v : w.data) v = rng.Uniform(-limit, limit);
  return std::make_shared<Parameter>(name, std::move(w));
}

// Copies the columns of each (F x width) map into consecutive rows of one
// (sum widths x F) matrix, the layout batch norm works on.
Tensor StackColumns(const std::vector<Tensor>& maps) {
  std::size_t rows = 0;
  for (const Tensor& m : maps) rows += m.dim(1);
  const std::size_t f = maps.front().dim(0);
  Tensor out({rows, f});
  std::size_t r = 0;
  for (const Tensor& m : maps) {
    for (std::size_t j = 0; j < m.dim(1); ++j, ++r) {
      for (std::size_t k = 0; k < f; ++k) out(r, k) = m(k, j);
    }
  }
  return out;
}

void UnstackColumns(const Tensor& stacked, std::vector<Tensor>& maps) {
  std::size_t r = 0;
  for (Tensor& m : maps) {
    for (std::size_t j = 0; j < m.dim(1); ++j, ++r) {
      for (std::size_t k = 0; k < m.dim(0); ++k) m(k, j) = stacked(r, k);
    }
  }
}

// Same for the real-token rows of (max_len x d) word-vector matrices.
Tensor StackRows(const std::vector<Tensor>& xs,
                 const std::vector<std::size_t>& lengths) {
  std::size_t rows = 0;
  for (std::size_t len : lengths) rows += len;
  const std::size_t d = xs.front().dim(1);
  Tensor out({rows, d});
  std::size_t r = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < lengths[i]; ++j, ++r) {
      std::copy_n(xs[i].row(j).begin(), d, out.row(r).begin());
    }
  }
  return out;
}

void UnstackRows(const Tensor& stacked, const std::vector<std::size_t>& lengths,
                 std::vector<Tensor>& xs) {
  std::size_t r = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < lengths[i]; ++j, ++r) {
      std::copy_n(stacked.row(r).begin(), xs[i].dim(1), xs[i].row(j).begin());
    }
  }
}

Tensor ApplyBatchNorm(const Tensor& stacked, kernels::BatchNormState& state,
                      Mode mode, kernels::BatchNormCache* cache) {
  if (mode == Mode::kTrain && stacked.dim(0) >= 2) {
    return kernels::BatchNorm(stacked, state, Mode::kTrain, cache);
  }
  return kernels::BatchNormInfer(stacked, state, cache);
}

}  // namespace

CodeSearchModel::CodeSearchModel(const EncoderConfig& config,
                                 const Vocabulary& vocab, std::uint64_t seed)
    : CodeSearchModel(config, vocab.ContentHash(), vocab.size(), seed) {}

CodeSearchModel::CodeSearchModel(const EncoderConfig& config,
                                 std::string vocab_hash,
                                 std::size_t vocab_size, std::uint64_t seed)
    : config_(config), vocab_hash_(std::move(vocab_hash)),
      vocab_size_(vocab_size) {
  config_.Validate();
  const std::size_t d = config_.embed_dim;
  auto make_tower = [&](const std::string& prefix,
                        std::shared_ptr<Parameter> embedding,
                        Tower::Pool pool) {
    auto t = std::make_shared<Tower>();
    t->prefix = prefix;
    t->pool = pool;
    t->embedding = embedding ? std::move(embedding)
                             : MakeEmbedding(prefix + ".embedding", vocab_size_,
                                             d, seed);
    const std::size_t features =
        pool == Tower::Pool::kConv ? config_.num_filters : d;
    if (pool == Tower::Pool::kConv) {
      t->filters = MakeFilters(prefix + ".filters", config_, seed);
      t->bias = std::make_shared<Parameter>(prefix + ".bias",
                                            Tensor({config_.num_filters}));
    }
    if (pool == Tower::Pool::kAttention) {
      t->attention =
          std::make_shared<Parameter>(prefix + ".attention", Tensor({d}));
    }
    if (config_.batch_norm) {
      t->bn = std::make_shared<kernels::BatchNormState>(prefix + ".bn",
                                                        features);
    }
    return t;
  };

  switch (config_.family) {
    case Family::kCnn:
    case Family::kEmbeddingBaseline: {
      const auto pool = config_.family == Family::kCnn ? Tower::Pool::kConv
                                                       : Tower::Pool::kMax;
      if (config_.shared_weights) {
        question_ = make_tower("shared", nullptr, pool);
        code_ = question_;
      } else {
        question_ = make_tower("question", nullptr, pool);
        code_ = make_tower("code", nullptr, pool);
      }
      break;
    }
    case Family::kUnif: {
      auto table = MakeEmbedding("embedding", vocab_size_, d, seed);
      question_ = make_tower("question", table, Tower::Pool::kAvg);
      code_ = make_tower("code", table, Tower::Pool::kAttention);
      break;
    }
  }
}

CodeSearchModel::~CodeSearchModel() = default;
CodeSearchModel::CodeSearchModel(CodeSearchModel&&) noexcept = default;
CodeSearchModel& CodeSearchModel::operator=(CodeSearchModel&&) noexcept =
    default;

std::size_t CodeSearchModel::output_dim() const {
  return config_.family == Family::kCnn ? config_.num_filters
                                        : config_.embed_dim;
}

CodeSearchModel::Tower& CodeSearchModel::tower(Side side) const {
  return side == Side::kQuestion ? *question_ : *code_;
}

void CodeSearchModel::SetWordEmbeddings(const Tensor& table) {
  const std::vector<std::size_t> want{vocab_size_, config_.embed_dim};
  if (table.shape != want) {
    throw DataError("word embeddings have shape " + ShapeString(table.shape) +
                    ", model needs " + ShapeString(want));
  }
  question_->embedding->value = table;
  code_->embedding->value = table;
}

Tensor CodeSearchModel::Run(Side side,
                            std::span<const TokenSequence* const> batch,
                            Mode mode, BatchCache* cache) const {
  const Tower& t = tower(side);
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  for (const TokenSequence* seq : batch) {
    if (seq->true_length == 0) {
      throw DataError(side == Side::kQuestion ? "empty question"
                                              : "empty code");
    }
  }
  if (cache) {
    cache->items.assign(n, {});
    cache->bn_applied = t.bn != nullptr;
  }
  kernels::BatchNormCache* bn_cache = cache ? &cache->bn : nullptr;
  Tensor out({n, output_dim()});

  if (t.pool == Tower::Pool::kConv) {
    std::vector<Tensor> inputs(n), maps(n);
    for (std::size_t i = 0; i < n; ++i) {
      inputs[i] = kernels::ExtendForWindow(
          kernels::EmbedLookup(*t.embedding, *batch[i]), batch[i]->true_length,
          config_.window_size);
      maps[i] = kernels::Conv1d(inputs[i], *t.filters, *t.bias);
    }
    if (t.bn) {
      UnstackColumns(ApplyBatchNorm(StackColumns(maps), *t.bn, mode, bn_cache),
                     maps);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Tensor act = kernels::Tanh(maps[i]);
      kernels::PoolResult pooled = kernels::MaxPoolOverTime(act, act.dim(1));
      std::copy(pooled.values.begin(), pooled.values.end(),
                out.row(i).begin());
      if (cache) {
        BatchCache::Item& item = cache->items[i];
        item.seq = batch[i];
        item.input = std::move(inputs[i]);
        item.activation = std::move(act);
        item.argmax = std::move(pooled.argmax);
      }
    }
    return out;
  }

  std::vector<Tensor> xs(n);
  std::vector<std::size_t> lengths(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = kernels::EmbedLookup(*t.embedding, *batch[i]);
    lengths[i] = std::min(batch[i]->true_length, xs[i].dim(0));
  }
  if (t.bn) {
    UnstackRows(
        ApplyBatchNorm(StackRows(xs, lengths), *t.bn, mode, bn_cache),
        lengths, xs);
  }
  for (std::size_t i = 0; i < n; ++i) {
    BatchCache::Item* item = cache ? &cache->items[i] : nullptr;
    switch (t.pool) {
      case Tower::Pool::kMax: {
        kernels::PoolResult pooled = kernels::MaxPoolRows(xs[i], lengths[i]);
        std::copy(pooled.values.begin(), pooled.values.end(),
                  out.row(i).begin());
        if (item) item->argmax = std::move(pooled.argmax);
        break;
      }
      case Tower::Pool::kAvg: {
        const std::vector<double> v = kernels::AvgPool(xs[i], lengths[i]);
        std::copy(v.begin(), v.end(), out.row(i).begin());
        break;
      }
      case Tower::Pool::kAttention: {
        kernels::AttentionResult a =
            kernels::AttentionPool(xs[i], *t.attention, lengths[i]);
        std::copy(a.values.begin(), a.values.end(), out.row(i).begin());
        if (item) item->attention = std::move(a);
        break;
      }
      case Tower::Pool::kConv:
        break;
    }
    if (item) {
      item->seq = batch[i];
      item->input = std::move(xs[i]);
    }
  }
  return out;
}

Tensor CodeSearchModel::Forward(Side side,
                                std::span<const TokenSequence* const> batch,
                                Mode mode, BatchCache* cache) {
  return Run(side, batch, mode, cache);
}

void CodeSearchModel::Backward(Side side, const BatchCache& cache,
                               const Tensor& d_out) {
  Tower& t = tower(side);
  const std::size_t n = cache.items.size();
  if (d_out.shape != std::vector<std::size_t>{n, output_dim()}) {
    throw std::invalid_argument("encoder gradient shape " +
                                ShapeString(d_out.shape) + " mismatch");
  }
  const bool train_embedding = !config_.freeze_embeddings;

  if (t.pool == Tower::Pool::kConv) {
    std::vector<Tensor> d_maps(n);
    for (std::size_t i = 0; i < n; ++i) {
      const BatchCache::Item& item = cache.items[i];
      d_maps[i] = kernels::TanhBackward(
          item.activation, kernels::MaxPoolBackward(item.activation.shape,
                                                    item.argmax, d_out.row(i)));
    }
    if (cache.bn_applied) {
      UnstackColumns(
          kernels::BatchNormBackward(cache.bn, *t.bn, StackColumns(d_maps)),
          d_maps);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const BatchCache::Item& item = cache.items[i];
      const Tensor d_input =
          kernels::Conv1dBackward(item.input, *t.filters, *t.bias, d_maps[i]);
      if (!train_embedding) continue;
      // Rows past true_length are the zero extension, not table lookups.
      Tensor d_x({item.seq->max_len(), config_.embed_dim});
      const std::size_t real = std::min(item.seq->true_length, d_x.dim(0));
      std::copy_n(d_input.data.begin(), real * config_.embed_dim,
                  d_x.data.begin());
      kernels::EmbedLookupBackward(*t.embedding, *item.seq, d_x);
    }
    return;
  }

  std::vector<Tensor> d_xs(n);
  std::vector<std::size_t> lengths(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BatchCache::Item& item = cache.items[i];
    lengths[i] = std::min(item.seq->true_length, item.input.dim(0));
    switch (t.pool) {
      case Tower::Pool::kMax:
        d_xs[i] = kernels::MaxPoolRowsBackward(item.input.shape, item.argmax,
                                               d_out.row(i));
        break;
      case Tower::Pool::kAvg:
        d_xs[i] = kernels::AvgPoolBackward(item.input.shape, lengths[i],
                                           d_out.row(i));
        break;
      case Tower::Pool::kAttention:
        d_xs[i] = kernels::AttentionPoolBackward(item.input, *t.attention,
                                                 item.attention, d_out.row(i));
        break;
      case Tower::Pool::kConv:
        break;
    }
  }
  if (cache.bn_applied) {
    UnstackRows(kernels::BatchNormBackward(cache.bn, *t.bn,
                                           StackRows(d_xs, lengths)),
                lengths, d_xs);
  }
  if (!train_embedding) return;
  for (std::size_t i = 0; i < n; ++i) {
    kernels::EmbedLookupBackward(*t.embedding, *cache.items[i].seq, d_xs[i]);
  }
}

std::vector<double> CodeSearchModel::Encode(Side side,
                                            const TokenSequence& seq) const {
  const TokenSequence* batch[] = {&seq};
  return Run(side, batch, Mode::kInfer, nullptr).data;
}

std::vector<double> CodeSearchModel::EncodeQuestion(
    const TokenSequence& seq) const {
  return Encode(Side::kQuestion, seq);
}

std::vector<double> CodeSearchModel::EncodeCode(
    const TokenSequence& seq) const {
  return Encode(Side::kCode, seq);
}

double CodeSearchModel::Score(const TokenSequence& q,
                              const TokenSequence& c) const {
  return kernels::Cosine(EncodeQuestion(q), EncodeCode(c));
}

std::vector<Parameter*> CodeSearchModel::Parameters() {
  std::vector<Parameter*> out;
  auto add = [&](const std::shared_ptr<Parameter>& p) {
    if (p && std::find(out.begin(), out.end(), p.get()) == out.end()) {
      out.push_back(p.get());
    }
  };
  for (const Tower* t : {question_.get(), code_.get()}) {
    add(t->embedding);
    add(t->filters);
    // Batch norm removes any per-filter offset, and beta takes its place, so
    // the conv bias then stays at zero and is not a parameter.
    if (!t->bn) add(t->bias);
    add(t->attention);
    if (t->bn) {
      if (std::find(out.begin(), out.end(), &t->bn->gamma) == out.end()) {
        out.push_back(&t->bn->gamma);
        out.push_back(&t->bn->beta);
      }
    }
  }
  return out;
}

std::vector<Parameter*> CodeSearchModel::TrainableParameters() {
  std::vector<Parameter*> out = Parameters();
  if (config_.freeze_embeddings) {
    std::erase_if(out, [&](const Parameter* p) {
      return p == question_->embedding.get() || p == code_->embedding.get();
    });
  }
  return out;
}

void CodeSearchModel::ZeroGrad() {
  for (Parameter* p : Parameters()) p->ZeroGrad();
}

std::vector<std::pair<std::string, Tensor*>> CodeSearchModel::StateTensors()
    const {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (Parameter* p : const_cast<CodeSearchModel*>(this)->Parameters()) {
    out.emplace_back(p->name, &p->value);
  }
  for (const Tower* t : {question_.get(), code_.get()}) {
    if (!t->bn) continue;
    const std::string mean = t->prefix + ".bn.running_mean";
    const bool seen =
        std::any_of(out.begin(), out.end(),
                    [&](const auto& e) { return e.first == mean; });
    if (seen) continue;
    out.emplace_back(mean, &t->bn->running_mean);
    out.emplace_back(t->prefix + ".bn.running_var", &t->bn->running_var);
  }
  return out;
}

std::string CodeSearchModel::Serialize() const {
  ByteWriter w;
  w.Bytes("CNCM");
  w.U32(1);
  const json header = {{"config", json::parse(EncoderConfigToJson(config_))},
                       {"vocab_hash", vocab_hash_},
                       {"vocab_size", vocab_size_}};
  w.LengthPrefixed(header.dump());
  for (const auto& [name, tensor] : StateTensors()) {
    w.U32(static_cast<std::uint32_t>(name.size()));
    w.Bytes(name);
    w.U32(static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape) w.U64(d);
    for (double v : tensor->data) w.F32(static_cast<float>(v));
  }
  return w.Take();
}

CodeSearchModel CodeSearchModel::Parse(std::string_view bytes,
                                       const std::string& source) {
  ByteReader r(bytes, source);
  r.ExpectMagic("CNCM");
  const std::uint32_t version = r.U32();
  if (version != 1) {
    throw DataError(source + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  EncoderConfig config;
  std::string vocab_hash;
  std::size_t vocab_size = 0;
  try {
    const json header = json::parse(r.LengthPrefixed());
    config = EncoderConfigFromJson(header.at("config").dump());
    vocab_hash = header.at("vocab_hash").get<std::string>();
    vocab_size = header.at("vocab_size").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(source + ": bad checkpoint header: " + e.what());
  }
  try {
    config.Validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(source + ": " + e.what());
  }

  std::map<std::string, Tensor> records;
  while (!r.AtEnd()) {
    const std::uint32_t name_len = r.U32();
    std::string name(r.Bytes(name_len));
    Tensor t;
    t.shape.resize(r.U32());
    for (std::size_t& d : t.shape) d = r.U64();
    const std::size_t size = ShapeSize(t.shape);
    if (size > r.remaining() / 4) {
      throw DataError(source + ": truncated tensor \"" + name + "\"");
    }
    t.data.resize(size);
    for (double& v : t.data) v = r.F32();
    if (!records.emplace(name, std::move(t)).second) {
      throw DataError(source + ": duplicate tensor \"" + name + "\"");
    }
  }

  CodeSearchModel model(config, vocab_hash, vocab_size, 0);
  for (const auto& [name, tensor] : model.StateTensors()) {
    auto it = records.find(name);
    if (it == records.end()) {
      throw DataError(source + ": missing tensor \"" + name + "\"");
    }
    if (it->second.shape != tensor->shape) {
      throw DataError(source + ": tensor \"" + name + "\" has shape " +
                      ShapeString(it->second.shape) + ", expected " +
                      ShapeString(tensor->shape));
    }
    *tensor = std::move(it->second);
    records.erase(it);
  }
  if (!records.empty()) {
    throw DataError(source + ": unknown tensor \"" + records.begin()->first +
                    "\"");
  }
  return model;
}

void CodeSearchModel::Save(const std::filesystem::path& path) const {
  WriteFileBytes(path, Serialize());
}

CodeSearchModel CodeSearchModel::Load(const std::filesystem::path& path,
                                      const Vocabulary& vocab) {
  CodeSearchModel model = Parse(ReadFileBytes(path), path.string());
  if (model.vocab_hash() != vocab.ContentHash()) {
    throw DataError(path.string() +
                    ": checkpoint was trained with a different vocabulary");
  }
  return model;
}

Digest CodeSearchModel::Checksum() const { return Sha256(Serialize()); }

std::vector<EncodedPair> EncodePairs(std::span<const QCPair> pairs,
                                     const Vocabulary& vocab,
                                     const EncoderConfig& config,
                                     std::size_t* dropped) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  std::size_t skipped = 0;
  for (const QCPair& p : pairs) {
    const auto q_tokens = TokenizeQuestion(p.question);
    const auto c_tokens = TokenizeCode(p.code);
    if (q_tokens.empty() || c_tokens.empty()) {
      ++skipped;
      continue;
    }
    out.push_back({p.id,
                   EncodeSequence(vocab, q_tokens, config.max_len_question),
                   EncodeSequence(vocab, c_tokens, config.max_len_code)});
  }
  if (dropped) *dropped = skipped;
  return out;
}

}  // namespace codesearch
