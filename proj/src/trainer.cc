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

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "codesearch/binary_io.h"
#include "codesearch/error.h"
#include "codesearch/eval.h"
#include "codesearch/kernels.h"
#include "codesearch/rng.h"
#include "json.hpp"

namespace codesearch {

std::vector<Triplet> SampleTriplets(std::span<const EncodedPair> pairs,
                                    std::uint64_t epoch, std::uint64_t seed) {
  if (pairs.size() < 2) {
    throw std::invalid_argument("triplets need at least two pairs");
  }
  Rng rng(DeriveSeed(seed, 0x7419, epoch));
  std::vector<Triplet> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    // Uniform over the other n-1 indices.
    std::size_t j = rng.Index(pairs.size() - 1);
    if (j >= i) ++j;
    out.push_back({pairs[i].question, pairs[i].code, pairs[j].code,
                   pairs[i].id, pairs[j].id});
  }
  return out;
}

std::string_view OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer \"" + std::string(name) +
                              "\"");
}

std::string_view StopReasonName(StopReason reason) {
  switch (reason) {
    case StopReason::kLossFloor:
      return "loss_floor";
    case StopReason::kPatience:
      return "patience";
    case StopReason::kMaxEpochs:
      return "max_epochs";
  }
  return "?";
}

void TrainConfig::Validate() const {
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience == 0) throw std::invalid_argument("patience must be >= 1");
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate,
                     std::vector<Parameter*> params)
    : kind_(kind), learning_rate_(learning_rate), params_(std::move(params)) {
  if (kind_ == OptimizerKind::kAdam) {
    for (const Parameter* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
}

bool Optimizer::Step() {
  bool any = false;
  for (const Parameter* p : params_) {
    for (double g : p->grad.data) {
      if (g != 0.0) {
        any = true;
        break;
      }
    }
    if (any) break;
  }
  if (!any) return false;

  if (kind_ == OptimizerKind::kSgd) {
    for (Parameter* p : params_) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->value.data[i] -= learning_rate_ * p->grad.data[i];
      }
    }
    return true;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEpsilon = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    std::vector<double>& m = m_[k];
    std::vector<double>& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      // Untouched entries (e.g. embedding rows never seen) stay exactly put.
      if (m[i] == 0.0) continue;
      p.value.data[i] -=
          learning_rate_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEpsilon);
    }
  }
  return true;
}

double TripletBatchLoss(CodeSearchModel& model,
                        std::span<const Triplet* const> batch, double margin,
                        Mode mode, bool backward) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("empty triplet batch");
  std::vector<const TokenSequence*> questions(n), codes(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    questions[i] = &batch[i]->q;
    codes[i] = &batch[i]->c_pos;
    codes[n + i] = &batch[i]->c_neg;
  }
  BatchCache q_cache, c_cache;
  const Tensor q = model.Forward(Side::kQuestion, questions, mode,
                                 backward ? &q_cache : nullptr);
  const Tensor c =
      model.Forward(Side::kCode, codes, mode, backward ? &c_cache : nullptr);

  Tensor d_q(q.shape), d_c(c.shape);
  const double scale = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s_pos = kernels::Cosine(q.row(i), c.row(i));
    const double s_neg = kernels::Cosine(q.row(i), c.row(n + i));
    total += kernels::HingeLoss(s_pos, s_neg, margin);
    if (!backward) continue;
    const auto [g_pos, g_neg] =
        kernels::HingeLossBackward(s_pos, s_neg, margin);
    if (g_pos == 0.0 && g_neg == 0.0) continue;
    kernels::CosineBackward(q.row(i), c.row(i), g_pos * scale, d_q.row(i),
                            d_c.row(i));
    kernels::CosineBackward(q.row(i), c.row(n + i), g_neg * scale, d_q.row(i),
                            d_c.row(n + i));
  }
  if (backward) {
    model.Backward(Side::kQuestion, q_cache, d_q);
    model.Backward(Side::kCode, c_cache, d_c);
  }
  return total * scale;
}

double EvaluateLoss(const CodeSearchModel& model,
                    std::span<const Triplet> triplets, double margin) {
  if (triplets.empty()) throw std::invalid_argument("no triplets");
  double total = 0.0;
  for (const Triplet& t : triplets) {
    const std::vector<double> q = model.EncodeQuestion(t.q);
    total += kernels::HingeLoss(kernels::Cosine(q, model.EncodeCode(t.c_pos)),
                                kernels::Cosine(q, model.EncodeCode(t.c_neg)),
                                margin);
  }
  return total / static_cast<double>(triplets.size());
}

double ExhaustiveLoss(const CodeSearchModel& model,
                      std::span<const EncodedPair> pairs, double margin) {
  if (pairs.size() < 2) throw std::invalid_argument("need two pairs");
  std::vector<std::vector<double>> q, c;
  for (const EncodedPair& p : pairs) {
    q.push_back(model.EncodeQuestion(p.question));
    c.push_back(model.EncodeCode(p.code));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double pos = kernels::Cosine(q[i], c[i]);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      if (j == i) continue;
      total += kernels::HingeLoss(pos, kernels::Cosine(q[i], c[j]), margin);
    }
  }
  const double n = static_cast<double>(pairs.size());
  return total / (n * (n - 1.0));
}

double TrainEpoch(CodeSearchModel& model, std::span<const Triplet> triplets,
                  const TrainConfig& config, Optimizer& optimizer,
                  std::uint64_t epoch) {
  if (triplets.empty()) throw std::invalid_argument("no triplets");
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(config.seed, 0xba7c, epoch));
  rng.Shuffle(order.begin(), order.end());

  double total = 0.0;
  std::vector<const Triplet*> batch;
  for (std::size_t start = 0; start < order.size();
       start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    batch.clear();
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(&triplets[order[k]]);
    }
    model.ZeroGrad();
    const double mean = TripletBatchLoss(model, batch, config.margin,
                                         Mode::kTrain, /*backward=*/true);
    total += mean * static_cast<double>(batch.size());
    optimizer.Step();
  }
  return total / static_cast<double>(triplets.size());
}

namespace {

void CheckFinite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what);
  }
}

}  // namespace

TrainReport Fit(CodeSearchModel& model, std::span<const EncodedPair> train,
                std::span<const EncodedPair> validation,
                std::span<const EncodedPair> dev, const TrainConfig& config,
                const FitOptions& options) {
  config.Validate();
  if (dev.empty()) throw std::invalid_argument("no DEV pairs");
  const std::vector<Triplet> val_triplets =
      SampleTriplets(validation, 0, DeriveSeed(config.seed, 0x7a1));
  EvalOptions dev_options;
  dev_options.distractors = config.dev_distractors;
  dev_options.iterations = 1;
  dev_options.seed = config.seed;
  const std::vector<std::string> dev_ids = PairIds(dev);
  const std::vector<std::string> train_ids = PairIds(train);
  if (!options.checkpoint_dir.empty()) {
    std::filesystem::create_directories(options.checkpoint_dir);
  }

  Optimizer optimizer(config.optimizer, config.learning_rate,
                      model.TrainableParameters());
  TrainReport report;
  std::string best_bytes;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::vector<Triplet> triplets =
        SampleTriplets(train, epoch, config.seed);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = TrainEpoch(model, triplets, config, optimizer, epoch);
    CheckFinite(rec.train_loss, "training loss");
    rec.val_loss = EvaluateLoss(model, val_triplets, config.margin);
    CheckFinite(rec.val_loss, "validation loss");
    {
      const ModelScorer scorer(model, dev, train);
      rec.dev_mrr =
          EvaluateProtocol(scorer, dev_ids, train_ids, dev_options).mrr_mean;
    }
    report.epochs.push_back(rec);

    if (report.best_epoch == 0 || rec.dev_mrr > report.best_dev_mrr) {
      report.best_epoch = epoch;
      report.best_dev_mrr = rec.dev_mrr;
      best_bytes = model.Serialize();
      if (!options.checkpoint_dir.empty()) {
        WriteFileBytes(options.checkpoint_dir /
                           ("ckpt-epoch" + std::to_string(epoch) + ".cncm"),
                       best_bytes);
        WriteFileBytes(options.checkpoint_dir / "best.cncm", best_bytes);
      }
    }
    if (options.log) {
      *options.log << "epoch " << epoch << " train_loss " << rec.train_loss
                   << " val_loss " << rec.val_loss << " dev_mrr "
                   << rec.dev_mrr << "\n";
    }

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      stale = 0;
    } else {
      ++stale;
    }
    if (rec.train_loss < config.train_loss_floor) {
      report.stop_reason = StopReason::kLossFloor;
      break;
    }
    if (stale >= config.patience) {
      report.stop_reason = StopReason::kPatience;
      break;
    }
    report.stop_reason = StopReason::kMaxEpochs;
  }
  model = CodeSearchModel::Parse(best_bytes, "best checkpoint");
  return report;
}

std::string ReportToJsonl(const TrainReport& report) {
  std::string out;
  for (const EpochRecord& r : report.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["val_loss"] = r.val_loss;
    j["dev_mrr"] = r.dev_mrr;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace codesearch
