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

#ifndef CODESEARCH_REFERENCE_KERNELS_H_
#define CODESEARCH_REFERENCE_KERNELS_H_

// Straight-line serial versions of the parallel kernels. Not used on any
// production path; tests compare kernels.h against these and the benchmark
// measures the difference.

#include <cstddef>
#include <span>
#include <vector>

#include "codesearch/tensor.h"

namespace codesearch::reference {

// Same contracts as the kernels:: functions of the same name, over plain
// tensors.
Tensor Conv1d(const Tensor& input, const Tensor& filters, const Tensor& bias);

struct ConvGrads {
  Tensor d_input;
  Tensor d_filters;
  Tensor d_bias;
};
ConvGrads Conv1dBackward(const Tensor& input, const Tensor& filters,
                         const Tensor& d_pre);

std::vector<double> MaxPoolOverTime(const Tensor& map, std::size_t valid_width,
                                    std::vector<std::size_t>* argmax);

std::vector<double> CosineScores(std::span<const double> query,
                                 const Tensor& candidates);

}  // namespace codesearch::reference

#endif  // CODESEARCH_REFERENCE_KERNELS_H_
