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

#ifndef BVC_AUTOGRAD_H_
#define BVC_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "bvc/tensor.h"

namespace bvc {

// Reverse-mode autodiff over a dynamically built tape. Every op produces a
// Node whose backprop closure scatters the node's grad into its parents.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first touch, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  Tensor& ensure_grad() {
    if (!grad.defined()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false) {
    node_ = std::make_shared<Node>();
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::shared_ptr<Node>& node() const { return node_; }

  void zero_grad() {
    if (node_ && node_->grad.defined()) node_->grad.fill(0.0f);
  }

 private:
  std::shared_ptr<Node> node_;
};

// Graph recording is disabled inside coding paths; values are computed the
// same either way.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Builds an op node. The backprop closure is dropped when recording is off or
// no parent requires a gradient.
Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backprop);

// Runs backprop from a scalar root (seeds its grad with 1).
void backward(const Var& root);

}  // namespace bvc

#endif  // BVC_AUTOGRAD_H_
