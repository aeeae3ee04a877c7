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

#ifndef CODESEARCH_TENSOR_H_
#define CODESEARCH_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace codesearch {

// Dense row-major tensor of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  // Throws std::invalid_argument if product(shape) != data.size().
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  // Rank-2 accessors.
  double& operator()(std::size_t r, std::size_t c) {
    return data[r * shape[1] + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * shape[1] + c];
  }
  std::span<double> row(std::size_t r) {
    return {data.data() + r * shape[1], shape[1]};
  }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * shape[1], shape[1]};
  }

  void Fill(double v);
  bool AllFinite() const;
  bool operator==(const Tensor&) const = default;
};

std::size_t ShapeSize(const std::vector<std::size_t>& shape);
std::string ShapeString(const std::vector<std::size_t>& shape);

// A learnable tensor and its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string name, Tensor value);
  void ZeroGrad() { grad.Fill(0.0); }
};

}  // namespace codesearch

#endif  // CODESEARCH_TENSOR_H_
