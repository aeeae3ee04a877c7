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

#ifndef CODESEARCH_GRAD_CHECK_H_
#define CODESEARCH_GRAD_CHECK_H_

#include <functional>
#include <span>
#include <vector>

namespace codesearch {

// |a - n| / max(|a|, |n|, 1e-8).
double RelativeError(double analytic, double numeric);

double MaxRelativeError(std::span<const double> analytic,
                        std::span<const double> numeric);

// Central differences (f(x+eps) - f(x-eps)) / 2eps for every entry of x.
// `f` must read x through the span's storage; entries are restored after
// each probe.
std::vector<double> NumericGradient(const std::function<double()>& f,
                                    std::span<double> x, double eps = 1e-5);

// Max relative error between `analytic` and the central-difference gradient
// of f with respect to x.
double GradCheck(const std::function<double()>& f, std::span<double> x,
                 std::span<const double> analytic, double eps = 1e-5);

}  // namespace codesearch

#endif  // CODESEARCH_GRAD_CHECK_H_
