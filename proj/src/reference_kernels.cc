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

#include "codesearch/reference_kernels.h"

#include <cmath>
#include <stdexcept>

namespace codesearch::reference {

Tensor Conv1d(const Tensor& input, const Tensor& filters, const Tensor& bias) {
  const std::size_t n = input.dim(0), d = input.dim(1);
  const std::size_t num_filters = filters.dim(0), window = filters.dim(1);
  if (n < window) throw std::invalid_argument("input shorter than window");
  const std::size_t width = n - window + 1;
  Tensor out({num_filters, width});
  for (std::size_t i = 0; i < width; ++i) {
    for (std::size_t f = 0; f < num_filters; ++f) {
      double s = 0.0;
      for (std::size_t j = 0; j < window; ++j) {
        for (std::size_t c = 0; c < d; ++c) {
          s += input(i + j, c) * filters.data[(f * window + j) * d + c];
        }
      }
      out(f, i) = s + bias.data[f];
    }
  }
  return out;
}

ConvGrads Conv1dBackward(const Tensor& input, const Tensor& filters,
                         const Tensor& d_pre) {
  const std::size_t d = input.dim(1);
  const std::size_t num_filters = filters.dim(0), window = filters.dim(1);
  const std::size_t width = d_pre.dim(1);
  ConvGrads g{Tensor(input.shape), Tensor(filters.shape),
              Tensor({num_filters})};
  for (std::size_t f = 0; f < num_filters; ++f) {
    for (std::size_t i = 0; i < width; ++i) {
      const double up = d_pre(f, i);
      g.d_bias.data[f] += up;
      for (std::size_t j = 0; j < window; ++j) {
        for (std::size_t c = 0; c < d; ++c) {
          const std::size_t w_idx = (f * window + j) * d + c;
          g.d_filters.data[w_idx] += up * input(i + j, c);
          g.d_input(i + j, c) += up * filters.data[w_idx];
        }
      }
    }
  }
  return g;
}

std::vector<double> MaxPoolOverTime(const Tensor& map, std::size_t valid_width,
                                    std::vector<std::size_t>* argmax) {
  if (valid_width == 0) throw std::invalid_argument("empty pool");
  std::vector<double> out(map.dim(0));
  if (argmax) argmax->assign(map.dim(0), 0);
  for (std::size_t f = 0; f < map.dim(0); ++f) {
    double best = map(f, 0);
    std::size_t at = 0;
    for (std::size_t i = 1; i < valid_width; ++i) {
      if (map(f, i) > best) {
        best = map(f, i);
        at = i;
      }
    }
    out[f] = best;
    if (argmax) (*argmax)[f] = at;
  }
  return out;
}

std::vector<double> CosineScores(std::span<const double> query,
                                 const Tensor& candidates) {
  double qq = 0.0;
  for (double v : query) qq += v * v;
  std::vector<double> out(candidates.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double dot = 0.0, cc = 0.0;
    for (std::size_t k = 0; k < query.size(); ++k) {
      dot += query[k] * candidates(i, k);
      cc += candidates(i, k) * candidates(i, k);
    }
    out[i] = dot / std::sqrt(qq * cc);
  }
  return out;
}

}  // namespace codesearch::reference
