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

#include "bvc/flow.h"

#include <cmath>

namespace bvc {

Var warp(const Var& feature, const Var& flow) {
  check_arg(feature.value().ndim() == 3 && flow.value().ndim() == 3 &&
                flow.value().dim(0) == 2 &&
                feature.value().dim(1) == flow.value().dim(1) &&
                feature.value().dim(2) == flow.value().dim(2),
            "warp: feature/flow dimension mismatch");
  return warp_bilinear(feature, flow);
}

Flow downsample_flow(const Flow& f) {
  const Tensor& t = f.values();
  check_arg(t.dim(1) >= 2 && t.dim(2) >= 2, "downsample_flow: too small");
  Flow out;
  out.v = mul_scalar(avg_pool2(f.v), 0.5f);
  out.source = f.source;
  out.target = f.target;
  return out;
}

std::pair<Flow, Flow> make_predictions(const Flow& v_bf, const Flow& v_fb,
                                       int d_f, int d_b) {
  check_arg(d_f > 0 && d_b > 0, "make_predictions: distances must be positive");
  const float wf = static_cast<float>(d_f) / static_cast<float>(d_f + d_b);
  const float wb = static_cast<float>(d_b) / static_cast<float>(d_f + d_b);
  Flow pred_tf, pred_tb;
  pred_tf.v = mul_scalar(v_bf.v, wf);
  pred_tb.v = mul_scalar(v_fb.v, wb);
  return {pred_tf, pred_tb};
}

Flow make_mvd(const Flow& v, const Flow& pred) {
  Flow r;
  r.v = sub(v.v, pred.v);
  r.source = v.source;
  r.target = v.target;
  return r;
}

Flow reconstruct_flow(const Flow& rhat, const Flow& pred) {
  Flow v;
  v.v = add(rhat.v, pred.v);
  v.source = rhat.source;
  v.target = rhat.target;
  return v;
}

void verify_bundle(const MotionBundle& b) {
  auto close = [](const Tensor& a, const Tensor& c) {
    check_arg(a.same_shape(c), "bundle: shape mismatch");
    float scale = 1.0f;
    for (size_t i = 0; i < a.numel(); ++i)
      scale = std::max({scale, std::abs(a[i]), std::abs(c[i])});
    for (size_t i = 0; i < a.numel(); ++i)
      check_arg(std::abs(a[i] - c[i]) <= 1e-5f * scale,
                "bundle: invariant violated beyond machine precision");
  };
  NoGradGuard g;
  close(b.r_tf.values(), sub(b.v_tf.v, b.pred_tf.v).value());
  close(b.r_tb.values(), sub(b.v_tb.v, b.pred_tb.v).value());
  close(b.vhat_tf.values(), add(b.rhat_tf.v, b.pred_tf.v).value());
  close(b.vhat_tb.values(), add(b.rhat_tb.v, b.pred_tb.v).value());
}

struct FlowEstimator::LevelNet : public Module {
  LevelNet(Rng& rng, int channels)
      : c0(rng, 8, channels, 3, 1, 1),
        c1(rng, channels, channels, 3, 1, 1),
        head(rng, channels, 2, 3, 1, 1, 0.1f) {
    register_child("c0", &c0);
    register_child("c1", &c1);
    register_child("head", &head);
  }
  Var forward(const Var& x) const {
    return head.forward(leaky_relu(c1.forward(leaky_relu(c0.forward(x)))));
  }
  Conv2d c0, c1, head;
};

FlowEstimator::~FlowEstimator() = default;

FlowEstimator::FlowEstimator(Rng& rng, int levels, int channels) {
  check_arg(levels >= 1, "flow estimator: need at least one level");
  for (int l = 0; l < levels; ++l) {
    levels_.push_back(std::make_unique<LevelNet>(rng, channels));
    register_child("lvl" + std::to_string(l), levels_.back().get());
  }
}

Var FlowEstimator::estimate(const Var& frame_a, const Var& frame_b) const {
  const Tensor& av = frame_a.value();
  check_arg(av.same_shape(frame_b.value()), "estimate_flow: resolution mismatch");
  const int down = 1 << (static_cast<int>(levels_.size()) - 1);
  check_arg(av.dim(1) % down == 0 && av.dim(2) % down == 0,
            "estimate_flow: resolution not divisible by pyramid factor");

  std::vector<Var> pyr_a{frame_a}, pyr_b{frame_b};
  for (size_t l = 1; l < levels_.size(); ++l) {
    pyr_a.push_back(avg_pool2(pyr_a.back()));
    pyr_b.push_back(avg_pool2(pyr_b.back()));
  }

  Var flow(Tensor::zeros({2, pyr_a.back().value().dim(1),
                          pyr_a.back().value().dim(2)}));
  for (int l = static_cast<int>(levels_.size()) - 1; l >= 0; --l) {
    Var warped = warp(pyr_b[static_cast<size_t>(l)], flow);
    Var inp = concat_ch({pyr_a[static_cast<size_t>(l)], warped, flow});
    flow = add(flow, levels_[static_cast<size_t>(l)]->forward(inp));
    if (l > 0) flow = mul_scalar(bilinear_up2(flow), 2.0f);
  }
  return flow;
}

}  // namespace bvc
