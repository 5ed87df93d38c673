// Copyright (c) the BVC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BVC_TENSOR_H_
#define BVC_TENSOR_H_

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bvc/common.h"

namespace bvc {

// Dense float32 tensor. Feature maps are [C,H,W]; vectors are [N].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(numel_of(shape_), 0.0f);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }
  static Tensor scalar(float v) { return full({1}, v); }

  bool defined() const { return !shape_.empty(); }
  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t numel() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  // [C,H,W] accessors.
  float& at(int c, int h, int w) {
    assert(ndim() == 3);
    return data_[(static_cast<size_t>(c) * dim(1) + h) * dim(2) + w];
  }
  float at(int c, int h, int w) const {
    assert(ndim() == 3);
    return data_[(static_cast<size_t>(c) * dim(1) + h) * dim(2) + w];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(float v) {
    for (auto& x : data_) x = v;
  }

  bool all_finite() const {
    for (float x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  float abs_max() const {
    float m = 0.0f;
    for (float x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  Tensor reshaped(std::vector<int> shape) const {
    check_arg(numel_of(shape) == numel(), "reshape: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  static size_t numel_of(const std::vector<int>& shape) {
    size_t n = shape.empty() ? 0 : 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

}  // namespace bvc

#endif  // BVC_TENSOR_H_
