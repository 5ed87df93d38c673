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

#include "bvc/nn.h"

#include <cmath>

namespace bvc {

void Module::collect_parameters(const std::string& prefix,
                                std::vector<Param*>* out) {
  for (auto& p : params_) {
    // Store fully qualified names once so serialization keys are stable.
    if (p->name.find('.') == std::string::npos && !prefix.empty())
      p->name = prefix + p->name;
    out->push_back(p.get());
  }
  for (auto& [name, child] : children_)
    child->collect_parameters(prefix + name + ".", out);
}

std::vector<Param*> Module::parameters() {
  std::vector<Param*> out;
  collect_parameters("", &out);
  return out;
}

void Module::zero_grad() {
  for (Param* p : parameters()) p->var.zero_grad();
}

Param* Module::register_param(const std::string& name, Tensor init) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->var = Var(std::move(init), /*requires_grad=*/true);
  params_.push_back(std::move(p));
  return params_.back().get();
}

void Module::register_child(const std::string& name, Module* child) {
  children_.emplace_back(name, child);
}

Conv2d::Conv2d(Rng& rng, int cin, int cout, int k, int stride, int pad,
               float out_gain)
    : stride_(stride), pad_(pad) {
  Tensor w({cout, cin, k, k});
  const float fan_in = static_cast<float>(cin * k * k);
  const float stddev = std::sqrt(2.0f / (1.0f + 0.01f)) / std::sqrt(fan_in);
  for (size_t i = 0; i < w.numel(); ++i)
    w[i] = rng.normal(0.0f, stddev) * out_gain;
  weight_ = register_param("w", std::move(w));
  bias_ = register_param("b", Tensor::zeros({cout}));
}

Var Conv2d::forward(const Var& x) const {
  return conv2d(x, weight_->var, bias_->var, stride_, pad_);
}

ResidualBlock::ResidualBlock(Rng& rng, int c)
    : conv1_(rng, c, c, 3, 1, 1), conv2_(rng, c, c, 3, 1, 1, 0.5f) {
  register_child("conv1", &conv1_);
  register_child("conv2", &conv2_);
}

Var ResidualBlock::forward(const Var& x) const {
  return add(x, conv2_.forward(leaky_relu(conv1_.forward(x))));
}

BottleneckBlock::BottleneckBlock(Rng& rng, int cin, int cout)
    : reduce_(rng, cin, cout, 1, 1, 0),
      conv_(rng, cout, cout, 3, 1, 1),
      expand_(rng, cout, cout, 1, 1, 0, 0.5f),
      skip_(cin == cout) {
  register_child("reduce", &reduce_);
  register_child("conv", &conv_);
  register_child("expand", &expand_);
}

Var BottleneckBlock::forward(const Var& x) const {
  Var h = leaky_relu(reduce_.forward(x));
  h = leaky_relu(conv_.forward(h));
  h = expand_.forward(h);
  return skip_ ? add(x, h) : h;
}

SubpixelUp::SubpixelUp(Rng& rng, int cin, int cout, int r)
    : conv_(rng, cin, cout * r * r, 3, 1, 1), r_(r) {
  register_child("conv", &conv_);
}

Var SubpixelUp::forward(const Var& x) const {
  return pixel_shuffle(conv_.forward(x), r_);
}

AdamW::AdamW(std::vector<Param*> params, float lr, float beta1, float beta2,
             float eps, float weight_decay)
    : params_(std::move(params)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      wd_(weight_decay) {}

void AdamW::zero_grad() {
  for (Param* p : params_) p->var.zero_grad();
}

void AdamW::step() {
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (Param* p : params_) {
    const Tensor& g = p->var.grad();
    if (!g.defined()) continue;
    Tensor& w = p->var.mutable_value();
    if (!p->adam_m.defined()) {
      p->adam_m = Tensor::zeros(w.shape());
      p->adam_v = Tensor::zeros(w.shape());
    }
    for (size_t i = 0; i < w.numel(); ++i) {
      const float gi = g[i];
      p->adam_m[i] = beta1_ * p->adam_m[i] + (1.0f - beta1_) * gi;
      p->adam_v[i] = beta2_ * p->adam_v[i] + (1.0f - beta2_) * gi * gi;
      const float mhat = p->adam_m[i] / bc1;
      const float vhat = p->adam_v[i] / bc2;
      w[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * w[i]);
    }
  }
}

}  // namespace bvc
