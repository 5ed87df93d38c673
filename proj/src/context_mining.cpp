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

#include "bvc/context_mining.h"

namespace bvc {

ContextMiner::~ContextMiner() = default;

ContextMiner::ContextMiner(Rng& rng, int ref_ch, int ctx_ch)
    : ref_ch_(ref_ch),
      ctx_ch_(ctx_ch),
      lift_(rng, 3, ref_ch, 3, 1, 1),
      fe0_(rng, ref_ch, ctx_ch, 3, 1, 1),
      fe1_(rng, ctx_ch, ctx_ch, 3, 2, 1),
      fe2_(rng, ctx_ch, ctx_ch, 3, 2, 1),
      fe0rb_(rng, ctx_ch),
      fe1rb_(rng, ctx_ch),
      fe2rb_(rng, ctx_ch),
      fu2_(rng, ctx_ch, ctx_ch, 3, 1, 1),
      fu1_(rng, 2 * ctx_ch, ctx_ch, 3, 1, 1),
      fu0_(rng, 2 * ctx_ch, ctx_ch, 3, 1, 1),
      fu2rb_(rng, ctx_ch),
      fu1rb_(rng, ctx_ch),
      fu0rb_(rng, ctx_ch),
      up1_(rng, ctx_ch, ctx_ch),
      up0_(rng, ctx_ch, ctx_ch),
      up1rb_(rng, ctx_ch),
      up0rb_(rng, ctx_ch) {
  register_child("lift", &lift_);
  for (int l = 1; l <= 5; ++l) {
    adaptors_.push_back(std::make_unique<Conv2d>(rng, ref_ch, ref_ch, 1, 1, 0));
    register_child("adaptor" + std::to_string(l), adaptors_.back().get());
  }
  register_child("fe0", &fe0_);
  register_child("fe1", &fe1_);
  register_child("fe2", &fe2_);
  register_child("fe0rb", &fe0rb_);
  register_child("fe1rb", &fe1rb_);
  register_child("fe2rb", &fe2rb_);
  register_child("fu2", &fu2_);
  register_child("fu1", &fu1_);
  register_child("fu0", &fu0_);
  register_child("fu2rb", &fu2rb_);
  register_child("fu1rb", &fu1rb_);
  register_child("fu0rb", &fu0rb_);
  register_child("up1", &up1_);
  register_child("up0", &up0_);
  register_child("up1rb", &up1rb_);
  register_child("up0rb", &up0rb_);
}

ReferenceFeature ContextMiner::lift_iframe(const Var& frame) const {
  check_arg(frame.value().ndim() == 3 && frame.value().dim(0) == 3,
            "lift_iframe: expected [3,H,W]");
  ReferenceFeature rf;
  rf.values = lift_.forward(frame);
  rf.origin = ReferenceFeature::Origin::kLiftedIframe;
  return rf;
}

ContextSet ContextMiner::mine(const ReferenceFeature& ref, const Flow& vhat,
                              int layer, Direction dir) const {
  check_arg(layer >= 1 && layer <= 5, "mine_contexts: layer out of range");
  const Tensor& fv = ref.values.value();
  check_arg(fv.ndim() == 3 && fv.dim(0) == ref_ch_,
            "mine_contexts: reference feature channel mismatch");
  check_arg(vhat.values().dim(1) == fv.dim(1) &&
                vhat.values().dim(2) == fv.dim(2),
            "mine_contexts: flow resolution mismatch");

  Var adapted = adaptors_[static_cast<size_t>(layer - 1)]->forward(ref.values);

  Var f0 = fe0rb_.forward(fe0_.forward(adapted));
  Var f1 = fe1rb_.forward(leaky_relu(fe1_.forward(f0)));
  Var f2 = fe2rb_.forward(leaky_relu(fe2_.forward(f1)));

  Flow v1 = downsample_flow(vhat);
  Flow v2 = downsample_flow(v1);

  Var w0 = warp(f0, vhat.v);
  Var w1 = warp(f1, v1.v);
  Var w2 = warp(f2, v2.v);

  ContextSet out;
  out.direction = dir;
  out.c2 = fu2rb_.forward(fu2_.forward(w2));
  Var u1 = up1rb_.forward(up1_.forward(out.c2));
  out.c1 = fu1rb_.forward(fu1_.forward(concat_ch({w1, u1})));
  Var u0 = up0rb_.forward(up0_.forward(out.c1));
  out.c0 = fu0rb_.forward(fu0_.forward(concat_ch({w0, u0})));
  return out;
}

}  // namespace bvc
