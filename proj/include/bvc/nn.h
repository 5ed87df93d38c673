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

#ifndef BVC_NN_H_
#define BVC_NN_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bvc/ops.h"

namespace bvc {

// Learnable tensor plus optimizer state.
struct Param {
  std::string name;
  Var var;
  Tensor adam_m;
  Tensor adam_v;
};

// Modules are pinned in memory (params are referenced by pointer).
class Module {
 public:
  Module() = default;
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  // Depth-first list of all parameters, names prefixed by child path.
  void collect_parameters(const std::string& prefix,
                          std::vector<Param*>* out);
  std::vector<Param*> parameters();
  void zero_grad();

 protected:
  Param* register_param(const std::string& name, Tensor init);
  void register_child(const std::string& name, Module* child);

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

class Conv2d : public Module {
 public:
  // Kaiming init for leaky-relu fan-in; `out_gain` rescales at construction
  // (small gains keep residual/prediction heads near identity at init).
  Conv2d(Rng& rng, int cin, int cout, int k, int stride, int pad,
         float out_gain = 1.0f);
  Var forward(const Var& x) const;

 private:
  Param* weight_;
  Param* bias_;
  int stride_, pad_;
};

// conv3x3 -> lrelu -> conv3x3, residual.
class ResidualBlock : public Module {
 public:
  ResidualBlock(Rng& rng, int c);
  Var forward(const Var& x) const;

 private:
  Conv2d conv1_, conv2_;
};

// 1x1 -> lrelu -> 3x3 -> lrelu -> 1x1 bottleneck; residual when cin == cout.
class BottleneckBlock : public Module {
 public:
  BottleneckBlock(Rng& rng, int cin, int cout);
  Var forward(const Var& x) const;

 private:
  Conv2d reduce_, conv_, expand_;
  bool skip_;
};

// conv3x3 to cout*r^2 followed by pixel shuffle.
class SubpixelUp : public Module {
 public:
  SubpixelUp(Rng& rng, int cin, int cout, int r = 2);
  Var forward(const Var& x) const;

 private:
  Conv2d conv_;
  int r_;
};

class AdamW {
 public:
  explicit AdamW(std::vector<Param*> params, float lr, float beta1 = 0.9f,
                 float beta2 = 0.999f, float eps = 1e-8f,
                 float weight_decay = 0.0f);
  void set_lr(float lr) { lr_ = lr; }
  void zero_grad();
  void step();

 private:
  std::vector<Param*> params_;
  float lr_, beta1_, beta2_, eps_, wd_;
  long t_ = 0;
};

}  // namespace bvc

#endif  // BVC_NN_H_
