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

#ifndef CODESEARCH_TRAINER_H_
#define CODESEARCH_TRAINER_H_

// Triplet sampling, minibatch optimization of the hinge ranking loss, and the
// epoch loop with early stopping and best-checkpoint selection.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codesearch/encoder.h"
#include "codesearch/tensor.h"

namespace codesearch {

struct Triplet {
  TokenSequence q;
  TokenSequence c_pos;
  TokenSequence c_neg;
  std::string pair_id;
  std::string negative_id;
};

// One triplet per pair, in pair order; each negative is the code of another
// pair chosen uniformly from a stream keyed by (seed, epoch). Throws
// std::invalid_argument for fewer than two pairs.
std::vector<Triplet> SampleTriplets(std::span<const EncodedPair> pairs,
                                    std::uint64_t epoch, std::uint64_t seed);

enum class OptimizerKind { kSgd, kAdam };
enum class StopReason { kLossFloor, kPatience, kMaxEpochs };

std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);
std::string_view StopReasonName(StopReason reason);

struct TrainConfig {
  double margin = 0.05;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 500;
  std::size_t patience = 25;
  double train_loss_floor = 0.0001;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.001;
  std::uint64_t seed = 1;
  // Distractors per DEV query for the per-epoch MRR.
  std::size_t dev_distractors = 49;

  // Throws std::invalid_argument.
  void Validate() const;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain SGD over a fixed
// parameter list.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate,
            std::vector<Parameter*> params);
  // Applies one update from the accumulated gradients. When every gradient
  // is exactly zero nothing changes (not even Adam's step count) and false
  // is returned.
  bool Step();

 private:
  OptimizerKind kind_;
  double learning_rate_;
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

// Mean of hinge_loss(cos(q, c+), cos(q, c-), margin) over `batch`. With
// `backward`, also adds the gradient of that mean to the parameter gradients.
double TripletBatchLoss(CodeSearchModel& model,
                        std::span<const Triplet* const> batch, double margin,
                        Mode mode, bool backward);

// Infer-mode mean loss; does not touch the model.
double EvaluateLoss(const CodeSearchModel& model,
                    std::span<const Triplet> triplets, double margin);

// Infer-mode mean hinge over every ordered (pair i, negative code j != i)
// combination. Zero exactly when each question outscores every other code
// by at least `margin`.
double ExhaustiveLoss(const CodeSearchModel& model,
                      std::span<const EncodedPair> pairs, double margin);

// One pass over shuffled minibatches with an optimizer step per batch.
// Returns the mean per-triplet training loss.
double TrainEpoch(CodeSearchModel& model, std::span<const Triplet> triplets,
                  const TrainConfig& config, Optimizer& optimizer,
                  std::uint64_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double dev_mrr = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_mrr = 0.0;
  StopReason stop_reason = StopReason::kMaxEpochs;
};

struct FitOptions {
  // When set, ckpt-epoch{N}.cncm is written for every epoch that improves
  // DEV MRR and best.cncm is kept current.
  std::filesystem::path checkpoint_dir;
  // Progress lines; may be null.
  std::ostream* log = nullptr;
};

// Trains `model` on `train`, tracking a validation loss over negatives
// sampled once, and DEV MRR (one iteration, distractors from `train`).
// Stops when the training loss falls below the floor, after `patience`
// epochs without a lower validation loss, or at max_epochs. On return
// `model` holds the checkpoint of the epoch with the best DEV MRR.
TrainReport Fit(CodeSearchModel& model, std::span<const EncodedPair> train,
                std::span<const EncodedPair> validation,
                std::span<const EncodedPair> dev, const TrainConfig& config,
                const FitOptions& options = {});

// {"epoch","train_loss","val_loss","dev_mrr"} per line.
std::string ReportToJsonl(const TrainReport& report);

}  // namespace codesearch

#endif  // CODESEARCH_TRAINER_H_
