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

#ifndef CODESEARCH_KERNELS_H_
#define CODESEARCH_KERNELS_H_

// Forward and backward kernels for the encoders and the ranking loss.
//
// Backward functions accumulate (+=) into Parameter::grad and return the
// gradient with respect to their data input. Loops that are parallelized
// with OpenMP write disjoint outputs and keep every inner reduction in a
// fixed order, so results do not depend on the thread count. The serial
// versions in reference_kernels.h are kept as the test oracle.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "codesearch/corpus.h"
#include "codesearch/tensor.h"

namespace codesearch {

enum class Mode { kTrain, kInfer };

namespace kernels {

// (max_len x d) rows of `table` selected by seq.ids. PAD always reads as the
// zero row regardless of what table row 0 holds. Throws std::out_of_range
// for ids outside the table.
Tensor EmbedLookup(const Parameter& table, const TokenSequence& seq);
// Adds d_out rows into table.grad. PAD positions are skipped.
void EmbedLookupBackward(Parameter& table, const TokenSequence& seq,
                         const Tensor& d_out);

// First `true_length` rows of `x` followed by window-1 zero rows, so that
// every window overlapping at least one real token has a position and the
// feature map width equals max(true_length, 1).
Tensor ExtendForWindow(const Tensor& x, std::size_t true_length,
                       std::size_t window);

// input (n x d), filters (F x w x d), bias (F) -> pre-activations
// (F x (n - w + 1)).
Tensor Conv1d(const Tensor& input, const Parameter& filters,
              const Parameter& bias);
Tensor Conv1dBackward(const Tensor& input, Parameter& filters, Parameter& bias,
                      const Tensor& d_pre);

// tanh(Conv1d(...)).
Tensor Conv1dTanh(const Tensor& input, const Parameter& filters,
                  const Parameter& bias);
Tensor Conv1dTanhBackward(const Tensor& input, Parameter& filters,
                          Parameter& bias, const Tensor& activation,
                          const Tensor& d_activation);

Tensor Tanh(const Tensor& x);
// d_pre = d_act * (1 - act^2).
Tensor TanhBackward(const Tensor& activation, const Tensor& d_activation);

struct PoolResult {
  std::vector<double> values;
  std::vector<std::size_t> argmax;
};

// Row-wise max of a (F x W) feature map over its first `valid_width` columns.
// Ties go to the lowest column. Throws std::invalid_argument("empty pool")
// when valid_width is 0.
PoolResult MaxPoolOverTime(const Tensor& map, std::size_t valid_width);
Tensor MaxPoolBackward(const std::vector<std::size_t>& map_shape,
                       const std::vector<std::size_t>& argmax,
                       std::span<const double> d_out);

// Column-wise max over the first `true_length` rows of (n x d) input. The
// embedding baseline pools word vectors this way.
PoolResult MaxPoolRows(const Tensor& input, std::size_t true_length);
Tensor MaxPoolRowsBackward(const std::vector<std::size_t>& input_shape,
                           const std::vector<std::size_t>& argmax,
                           std::span<const double> d_out);

// Mean of the first `true_length` rows of (n x d) input.
std::vector<double> AvgPool(const Tensor& input, std::size_t true_length);
Tensor AvgPoolBackward(const std::vector<std::size_t>& input_shape,
                       std::size_t true_length, std::span<const double> d_out);

struct AttentionResult {
  std::vector<double> values;
  std::vector<double> weights;  // softmax over the first true_length rows
};

// sum_i softmax_i(x_i . a) x_i over the first true_length rows.
AttentionResult AttentionPool(const Tensor& input, const Parameter& attention,
                              std::size_t true_length);
Tensor AttentionPoolBackward(const Tensor& input, Parameter& attention,
                             const AttentionResult& forward,
                             std::span<const double> d_out);

// Per-feature batch normalization of (N x C) rows with learned scale/shift.
struct BatchNormState {
  Parameter gamma;
  Parameter beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  BatchNormState(const std::string& prefix, std::size_t features);
};

struct BatchNormCache {
  Tensor normalized;
  std::vector<double> inv_std;
  Mode mode = Mode::kInfer;
};

// Train mode uses the batch statistics (biased variance) and folds them into
// the running statistics with `momentum`; it needs at least two rows.
Tensor BatchNorm(const Tensor& input, BatchNormState& state, Mode mode,
                 BatchNormCache* cache);
// Infer-only overload, read-only over the state.
Tensor BatchNormInfer(const Tensor& input, const BatchNormState& state,
                      BatchNormCache* cache = nullptr);
Tensor BatchNormBackward(const BatchNormCache& cache, BatchNormState& state,
                         const Tensor& d_out);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);

// a.b / (|a||b|). Throws NumericError("degenerate embedding") if either norm
// is zero.
double Cosine(std::span<const double> a, std::span<const double> b);
// Accumulates d_out * dcos/da and d_out * dcos/db.
void CosineBackward(std::span<const double> a, std::span<const double> b,
                    double d_out, std::span<double> d_a, std::span<double> d_b);

// Cosine of `query` against every row of `candidates` (N x d).
std::vector<double> CosineScores(std::span<const double> query,
                                 const Tensor& candidates);

// max(0, margin - s_pos + s_neg).
double HingeLoss(double s_pos, double s_neg, double margin);
// (dJ/ds_pos, dJ/ds_neg); zero at and below the kink.
std::pair<double, double> HingeLossBackward(double s_pos, double s_neg,
                                            double margin);

}  // namespace kernels
}  // namespace codesearch

#endif  // CODESEARCH_KERNELS_H_
