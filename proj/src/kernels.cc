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

#include "codesearch/kernels.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "codesearch/error.h"

namespace codesearch::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

void CheckRank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + " must be rank 2, got " +
                                ShapeString(t.shape));
  }
}

void CheckConvShapes(const Tensor& input, const Parameter& filters,
                     const Parameter& bias) {
  CheckRank2(input, "conv input");
  if (filters.value.rank() != 3) {
    throw std::invalid_argument("filters must be (F x window x d), got " +
                                ShapeString(filters.value.shape));
  }
  const std::size_t num_filters = filters.value.dim(0);
  const std::size_t window = filters.value.dim(1);
  if (filters.value.dim(2) != input.dim(1)) {
    throw std::invalid_argument("filter depth " +
                                std::to_string(filters.value.dim(2)) +
                                " != input width " +
                                std::to_string(input.dim(1)));
  }
  if (bias.value.size() != num_filters) {
    throw std::invalid_argument("bias size does not match filter count");
  }
  if (window == 0 || input.dim(0) < window) {
    throw std::invalid_argument("conv input has " +
                                std::to_string(input.dim(0)) +
                                " rows, window is " + std::to_string(window));
  }
}

}  // namespace

Tensor EmbedLookup(const Parameter& table, const TokenSequence& seq) {
  CheckRank2(table.value, "embedding table");
  const std::size_t d = table.value.dim(1);
  const std::size_t rows = table.value.dim(0);
  Tensor out({seq.max_len(), d});
  for (std::size_t i = 0; i < seq.max_len(); ++i) {
    const std::int32_t id = seq.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw std::out_of_range("token id " + std::to_string(id) +
                              " outside embedding table of " +
                              std::to_string(rows) + " rows");
    }
    if (id == kPadId) continue;
    auto src = table.value.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void EmbedLookupBackward(Parameter& table, const TokenSequence& seq,
                         const Tensor& d_out) {
  const std::size_t d = table.value.dim(1);
  if (d_out.rank() != 2 || d_out.dim(1) != d ||
      d_out.dim(0) < seq.true_length) {
    throw std::invalid_argument("embedding gradient shape mismatch");
  }
  const std::size_t n = std::min(d_out.dim(0), seq.max_len());
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t id = seq.ids[i];
    if (id == kPadId) continue;
    auto dst = table.grad.row(static_cast<std::size_t>(id));
    auto src = d_out.row(i);
    for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
  }
}

Tensor ExtendForWindow(const Tensor& x, std::size_t true_length,
                       std::size_t window) {
  CheckRank2(x, "input");
  if (window == 0) throw std::invalid_argument("window must be >= 1");
  const std::size_t real = std::max<std::size_t>(true_length, 1);
  const std::size_t d = x.dim(1);
  Tensor out({real + window - 1, d});
  const std::size_t copy_rows = std::min(true_length, x.dim(0));
  std::copy(x.data.begin(), x.data.begin() + copy_rows * d, out.data.begin());
  return out;
}

Tensor Conv1d(const Tensor& input, const Parameter& filters,
              const Parameter& bias) {
  CheckConvShapes(input, filters, bias);
  const std::size_t num_filters = filters.value.dim(0);
  const std::size_t window = filters.value.dim(1);
  const std::size_t d = input.dim(1);
  const std::size_t width = input.dim(0) - window + 1;
  const std::size_t k_len = window * d;
  Tensor out({num_filters, width});

  const double* x = input.data.data();
  const double* w = filters.value.data.data();
  const double* b = bias.value.data.data();
  double* o = out.data.data();
  const bool parallel = num_filters * width * k_len >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t f = 0; f < num_filters; ++f) {
    const double* wf = w + f * k_len;
    for (std::size_t i = 0; i < width; ++i) {
      const double* xi = x + i * d;
      double s = 0.0;
      for (std::size_t k = 0; k < k_len; ++k) s += xi[k] * wf[k];
      o[f * width + i] = s + b[f];
    }
  }
  return out;
}

Tensor Conv1dBackward(const Tensor& input, Parameter& filters, Parameter& bias,
                      const Tensor& d_pre) {
  CheckConvShapes(input, filters, bias);
  const std::size_t num_filters = filters.value.dim(0);
  const std::size_t window = filters.value.dim(1);
  const std::size_t d = input.dim(1);
  const std::size_t n = input.dim(0);
  const std::size_t width = n - window + 1;
  const std::size_t k_len = window * d;
  if (d_pre.shape != std::vector<std::size_t>{num_filters, width}) {
    throw std::invalid_argument("conv gradient shape " +
                                ShapeString(d_pre.shape) + " mismatch");
  }

  const double* x = input.data.data();
  const double* w = filters.value.data.data();
  const double* g = d_pre.data.data();
  double* dw = filters.grad.data.data();
  double* db = bias.grad.data.data();
  const bool parallel = num_filters * width * k_len >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t f = 0; f < num_filters; ++f) {
    const double* gf = g + f * width;
    double* dwf = dw + f * k_len;
    double bias_sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      const double gi = gf[i];
      bias_sum += gi;
      if (gi == 0.0) continue;
      const double* xi = x + i * d;
      for (std::size_t k = 0; k < k_len; ++k) dwf[k] += gi * xi[k];
    }
    db[f] += bias_sum;
  }

  Tensor d_input({n, d});
  double* dx = d_input.data.data();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t r = 0; r < n; ++r) {
    double* dxr = dx + r * d;
    for (std::size_t j = 0; j < window; ++j) {
      if (r < j || r - j >= width) continue;
      const std::size_t i = r - j;
      for (std::size_t f = 0; f < num_filters; ++f) {
        const double gi = g[f * width + i];
        if (gi == 0.0) continue;
        const double* wfj = w + f * k_len + j * d;
        for (std::size_t c = 0; c < d; ++c) dxr[c] += gi * wfj[c];
      }
    }
  }
  return d_input;
}

Tensor Tanh(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = std::tanh(v);
  return out;
}

Tensor TanhBackward(const Tensor& activation, const Tensor& d_activation) {
  if (activation.shape != d_activation.shape) {
    throw std::invalid_argument("tanh gradient shape mismatch");
  }
  Tensor d_pre(activation.shape);
  for (std::size_t i = 0; i < activation.size(); ++i) {
    const double a = activation.data[i];
    d_pre.data[i] = d_activation.data[i] * (1.0 - a * a);
  }
  return d_pre;
}

Tensor Conv1dTanh(const Tensor& input, const Parameter& filters,
                  const Parameter& bias) {
  return Tanh(Conv1d(input, filters, bias));
}

Tensor Conv1dTanhBackward(const Tensor& input, Parameter& filters,
                          Parameter& bias, const Tensor& activation,
                          const Tensor& d_activation) {
  return Conv1dBackward(input, filters, bias,
                        TanhBackward(activation, d_activation));
}

PoolResult MaxPoolOverTime(const Tensor& map, std::size_t valid_width) {
  CheckRank2(map, "feature map");
  if (valid_width == 0) throw std::invalid_argument("empty pool");
  if (valid_width > map.dim(1)) {
    throw std::invalid_argument("valid width exceeds feature map width");
  }
  const std::size_t rows = map.dim(0);
  PoolResult r{std::vector<double>(rows), std::vector<std::size_t>(rows)};
  const bool parallel = rows * valid_width >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t f = 0; f < rows; ++f) {
    auto row = map.row(f);
    std::size_t best = 0;
    for (std::size_t i = 1; i < valid_width; ++i) {
      if (row[i] > row[best]) best = i;
    }
    r.values[f] = row[best];
    r.argmax[f] = best;
  }
  return r;
}

Tensor MaxPoolBackward(const std::vector<std::size_t>& map_shape,
                       const std::vector<std::size_t>& argmax,
                       std::span<const double> d_out) {
  Tensor d_map(map_shape);
  if (map_shape.size() != 2 || argmax.size() != map_shape[0] ||
      d_out.size() != map_shape[0]) {
    throw std::invalid_argument("max-pool gradient shape mismatch");
  }
  for (std::size_t f = 0; f < argmax.size(); ++f) {
    d_map(f, argmax[f]) += d_out[f];
  }
  return d_map;
}

PoolResult MaxPoolRows(const Tensor& input, std::size_t true_length) {
  CheckRank2(input, "input");
  if (true_length == 0) throw std::invalid_argument("empty pool");
  if (true_length > input.dim(0)) {
    throw std::invalid_argument("true_length exceeds input rows");
  }
  const std::size_t d = input.dim(1);
  PoolResult r{std::vector<double>(input.row(0).begin(), input.row(0).end()),
               std::vector<std::size_t>(d, 0)};
  for (std::size_t i = 1; i < true_length; ++i) {
    auto row = input.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      if (row[c] > r.values[c]) {
        r.values[c] = row[c];
        r.argmax[c] = i;
      }
    }
  }
  return r;
}

Tensor MaxPoolRowsBackward(const std::vector<std::size_t>& input_shape,
                           const std::vector<std::size_t>& argmax,
                           std::span<const double> d_out) {
  Tensor d_input(input_shape);
  if (input_shape.size() != 2 || argmax.size() != input_shape[1] ||
      d_out.size() != input_shape[1]) {
    throw std::invalid_argument("max-pool gradient shape mismatch");
  }
  for (std::size_t c = 0; c < argmax.size(); ++c) {
    d_input(argmax[c], c) += d_out[c];
  }
  return d_input;
}

std::vector<double> AvgPool(const Tensor& input, std::size_t true_length) {
  CheckRank2(input, "input");
  if (true_length == 0) {
    throw std::invalid_argument("average pool over zero rows");
  }
  if (true_length > input.dim(0)) {
    throw std::invalid_argument("true_length exceeds input rows");
  }
  const std::size_t d = input.dim(1);
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < true_length; ++i) {
    auto row = input.row(i);
    for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
  }
  const double scale = 1.0 / static_cast<double>(true_length);
  for (double& v : out) v *= scale;
  return out;
}

Tensor AvgPoolBackward(const std::vector<std::size_t>& input_shape,
                       std::size_t true_length, std::span<const double> d_out) {
  Tensor d_input(input_shape);
  if (input_shape.size() != 2 || d_out.size() != input_shape[1] ||
      true_length == 0 || true_length > input_shape[0]) {
    throw std::invalid_argument("average-pool gradient shape mismatch");
  }
  const double scale = 1.0 / static_cast<double>(true_length);
  for (std::size_t i = 0; i < true_length; ++i) {
    auto row = d_input.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = d_out[c] * scale;
  }
  return d_input;
}

AttentionResult AttentionPool(const Tensor& input, const Parameter& attention,
                              std::size_t true_length) {
  CheckRank2(input, "input");
  if (true_length == 0) {
    throw std::invalid_argument("attention pool over zero rows");
  }
  const std::size_t d = input.dim(1);
  if (attention.value.size() != d) {
    throw std::invalid_argument("attention vector size mismatch");
  }
  if (true_length > input.dim(0)) {
    throw std::invalid_argument("true_length exceeds input rows");
  }
  AttentionResult r{std::vector<double>(d, 0.0),
                    std::vector<double>(true_length)};
  double peak = -INFINITY;
  for (std::size_t i = 0; i < true_length; ++i) {
    r.weights[i] = Dot(input.row(i), attention.value.data);
    peak = std::max(peak, r.weights[i]);
  }
  double total = 0.0;
  for (double& w : r.weights) {
    w = std::exp(w - peak);
    total += w;
  }
  for (double& w : r.weights) w /= total;
  for (std::size_t i = 0; i < true_length; ++i) {
    auto row = input.row(i);
    for (std::size_t c = 0; c < d; ++c) r.values[c] += r.weights[i] * row[c];
  }
  return r;
}

Tensor AttentionPoolBackward(const Tensor& input, Parameter& attention,
                             const AttentionResult& forward,
                             std::span<const double> d_out) {
  const std::size_t d = input.dim(1);
  const std::size_t n = forward.weights.size();
  if (d_out.size() != d) {
    throw std::invalid_argument("attention gradient shape mismatch");
  }
  // d score_i = w_i * (g_i - sum_j w_j g_j) with g_i = d_out . x_i
  std::vector<double> g(n);
  double mean_g = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = Dot(d_out, input.row(i));
    mean_g += forward.weights[i] * g[i];
  }
  Tensor d_input(input.shape);
  const auto& a = attention.value.data;
  auto& da = attention.grad.data;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = forward.weights[i];
    const double ds = w * (g[i] - mean_g);
    auto xi = input.row(i);
    auto dxi = d_input.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      dxi[c] = w * d_out[c] + ds * a[c];
      da[c] += ds * xi[c];
    }
  }
  return d_input;
}

BatchNormState::BatchNormState(const std::string& prefix, std::size_t features)
    : gamma(prefix + ".gamma", Tensor({features}, 1.0)),
      beta(prefix + ".beta", Tensor({features}, 0.0)),
      running_mean({features}, 0.0),
      running_var({features}, 1.0) {}

Tensor BatchNorm(const Tensor& input, BatchNormState& state, Mode mode,
                 BatchNormCache* cache) {
  if (mode == Mode::kInfer) return BatchNormInfer(input, state, cache);
  CheckRank2(input, "batch-norm input");
  const std::size_t rows = input.dim(0);
  const std::size_t cols = input.dim(1);
  if (cols != state.gamma.value.size()) {
    throw std::invalid_argument("batch-norm feature count mismatch");
  }
  if (rows < 2) {
    throw std::invalid_argument(
        "batch norm in train mode needs a batch of at least 2");
  }
  std::vector<double> mean(cols, 0.0), var(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) mean[c] += input(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = input(r, c) - mean[c];
      var[c] += t * t;
    }
  }
  for (double& v : var) v /= static_cast<double>(rows);

  BatchNormCache local;
  BatchNormCache& cc = cache ? *cache : local;
  cc.mode = Mode::kTrain;
  cc.inv_std.resize(cols);
  cc.normalized = Tensor(input.shape);
  for (std::size_t c = 0; c < cols; ++c) {
    cc.inv_std[c] = 1.0 / std::sqrt(var[c] + state.epsilon);
  }
  Tensor out(input.shape);
  const auto& gamma = state.gamma.value.data;
  const auto& beta = state.beta.value.data;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat = (input(r, c) - mean[c]) * cc.inv_std[c];
      cc.normalized(r, c) = xhat;
      out(r, c) = gamma[c] * xhat + beta[c];
    }
  }
  const double m = state.momentum;
  for (std::size_t c = 0; c < cols; ++c) {
    double& rm = state.running_mean.data[c];
    double& rv = state.running_var.data[c];
    rm = m * rm + (1 - m) * mean[c];
    rv = m * rv + (1 - m) * var[c];
  }
  return out;
}

Tensor BatchNormInfer(const Tensor& input, const BatchNormState& state,
                      BatchNormCache* cache) {
  CheckRank2(input, "batch-norm input");
  const std::size_t rows = input.dim(0);
  const std::size_t cols = input.dim(1);
  if (cols != state.gamma.value.size()) {
    throw std::invalid_argument("batch-norm feature count mismatch");
  }
  std::vector<double> inv_std(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    inv_std[c] = 1.0 / std::sqrt(state.running_var.data[c] + state.epsilon);
  }
  Tensor out(input.shape);
  Tensor normalized(cache ? input.shape : std::vector<std::size_t>{0});
  const auto& gamma = state.gamma.value.data;
  const auto& beta = state.beta.value.data;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat =
          (input(r, c) - state.running_mean.data[c]) * inv_std[c];
      if (cache) normalized(r, c) = xhat;
      out(r, c) = gamma[c] * xhat + beta[c];
    }
  }
  if (cache) {
    cache->mode = Mode::kInfer;
    cache->inv_std = std::move(inv_std);
    cache->normalized = std::move(normalized);
  }
  return out;
}

Tensor BatchNormBackward(const BatchNormCache& cache, BatchNormState& state,
                         const Tensor& d_out) {
  if (d_out.shape != cache.normalized.shape) {
    throw std::invalid_argument("batch-norm gradient shape mismatch");
  }
  const std::size_t rows = d_out.dim(0);
  const std::size_t cols = d_out.dim(1);
  const auto& gamma = state.gamma.value.data;
  auto& d_gamma = state.gamma.grad.data;
  auto& d_beta = state.beta.grad.data;
  Tensor d_input(d_out.shape);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      sum_dy += d_out(r, c);
      sum_dy_xhat += d_out(r, c) * cache.normalized(r, c);
    }
    d_gamma[c] += sum_dy_xhat;
    d_beta[c] += sum_dy;
    const double scale = gamma[c] * cache.inv_std[c];
    if (cache.mode == Mode::kInfer) {
      for (std::size_t r = 0; r < rows; ++r) {
        d_input(r, c) = d_out(r, c) * scale;
      }
      continue;
    }
    const double n = static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      d_input(r, c) = scale / n *
                      (n * d_out(r, c) - sum_dy -
                       cache.normalized(r, c) * sum_dy_xhat);
    }
  }
  return d_input;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

namespace {

// For a norm or squared norm. Zero vectors have no direction; NaN would
// pass through std::clamp and then vanish inside the hinge's max.
void CheckMagnitude(double s) {
  if (!std::isfinite(s)) throw NumericError("non-finite embedding");
  if (s == 0.0) throw NumericError("degenerate embedding");
}

}  // namespace

double Cosine(std::span<const double> a, std::span<const double> b) {
  const double aa = Dot(a, a);
  const double bb = Dot(b, b);
  CheckMagnitude(aa);
  CheckMagnitude(bb);
  // sqrt(s * s) rounds back to s exactly, so identical inputs give 1.0.
  const double c = Dot(a, b) / std::sqrt(aa * bb);
  return std::clamp(c, -1.0, 1.0);
}

void CosineBackward(std::span<const double> a, std::span<const double> b,
                    double d_out, std::span<double> d_a,
                    std::span<double> d_b) {
  const double na = Norm(a);
  const double nb = Norm(b);
  CheckMagnitude(na);
  CheckMagnitude(nb);
  const double inv = 1.0 / (na * nb);
  const double c = Dot(a, b) * inv;
  const double ka = c / (na * na);
  const double kb = c / (nb * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    d_a[i] += d_out * (b[i] * inv - ka * a[i]);
    d_b[i] += d_out * (a[i] * inv - kb * b[i]);
  }
}

std::vector<double> CosineScores(std::span<const double> query,
                                 const Tensor& candidates) {
  CheckRank2(candidates, "candidates");
  if (candidates.dim(1) != query.size()) {
    throw std::invalid_argument("candidate dimension mismatch");
  }
  const double qq = Dot(query, query);
  CheckMagnitude(qq);
  const std::size_t n = candidates.dim(0);
  const std::size_t d = query.size();
  std::vector<double> scores(n);
  bool degenerate = false;
  bool nonfinite = false;
  const bool parallel = n * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel) \
    reduction(|| : degenerate, nonfinite)
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = candidates.data.data() + i * d;
    double dot = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dot += query[k] * row[k];
      nn += row[k] * row[k];
    }
    if (!std::isfinite(nn)) {
      nonfinite = true;
      scores[i] = 0.0;
    } else if (nn == 0.0) {
      degenerate = true;
      scores[i] = 0.0;
    } else {
      scores[i] = std::clamp(dot / std::sqrt(qq * nn), -1.0, 1.0);
    }
  }
  if (nonfinite) throw NumericError("non-finite embedding");
  if (degenerate) throw NumericError("degenerate embedding");
  return scores;
}

double HingeLoss(double s_pos, double s_neg, double margin) {
  return std::max(0.0, margin - s_pos + s_neg);
}

std::pair<double, double> HingeLossBackward(double s_pos, double s_neg,
                                            double margin) {
  if (margin - s_pos + s_neg > 0.0) return {-1.0, 1.0};
  return {0.0, 0.0};
}

}  // namespace codesearch::kernels
