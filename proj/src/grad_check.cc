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

#include "codesearch/grad_check.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace codesearch {

double RelativeError(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double MaxRelativeError(std::span<const double> analytic,
                        std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("gradient size mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, RelativeError(analytic[i], numeric[i]));
  }
  return worst;
}

std::vector<double> NumericGradient(const std::function<double()>& f,
                                    std::span<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f();
    x[i] = saved - eps;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

double GradCheck(const std::function<double()>& f, std::span<double> x,
                 std::span<const double> analytic, double eps) {
  const std::vector<double> numeric = NumericGradient(f, x, eps);
  return MaxRelativeError(analytic, numeric);
}

}  // namespace codesearch
