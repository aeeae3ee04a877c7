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

#include "codesearch/tensor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace codesearch {

std::size_t ShapeSize(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape(std::move(shape)), data(ShapeSize(this->shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape(std::move(shape)), data(std::move(data)) {
  if (ShapeSize(this->shape) != this->data.size()) {
    throw std::invalid_argument("tensor shape " + ShapeString(this->shape) +
                                " does not match " +
                                std::to_string(this->data.size()) + " values");
  }
}

void Tensor::Fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string name, Tensor value)
    : name(std::move(name)), value(std::move(value)), grad(this->value.shape) {}

}  // namespace codesearch
