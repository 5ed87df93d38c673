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

#ifndef BVC_OPS_H_
#define BVC_OPS_H_

#include <vector>

#include "bvc/autograd.h"
#include "bvc/common.h"

namespace bvc {

// Elementwise / scalar.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, float s);
Var mul_scalar(const Var& a, float s);
Var leaky_relu(const Var& a, float slope = 0.1f);
Var sigmoid(const Var& a);
Var tanh_op(const Var& a);
Var exp_op(const Var& a);
Var log_op(const Var& a);
Var softplus(const Var& a);
Var reciprocal(const Var& a);
Var clamp(const Var& a, float lo, float hi);
Var square(const Var& a);

// Reductions.
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// Shape.
Var concat_ch(const std::vector<Var>& xs);           // [Ci,H,W] -> [sum Ci,H,W]
Var slice_ch(const Var& x, int c0, int c1);          // channels [c0,c1)
Var reshape(const Var& x, std::vector<int> shape);
Var crop_hw(const Var& x, int h, int w);             // keep top-left h x w

// Broadcast helpers.
Var channel_scale(const Var& x, const Var& s);       // x[C,H,W] * s[C]
Var mul_ch_bcast(const Var& x, const Var& m);        // x[C,H,W] * m[1,H,W]

// Convolution and resampling.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var pixel_shuffle(const Var& x, int r);              // [C*r*r,H,W] -> [C,rH,rW]
Var avg_pool2(const Var& x);                         // H,W even
Var bilinear_up2(const Var& x);
Var warp_bilinear(const Var& feat, const Var& flow); // border replicate
Var gauss_blur_valid(const Var& x, const std::vector<float>& kernel);

// Quantization.
Var round_ste(const Var& x);                         // straight-through round
Var add_uniform_noise(const Var& x, Rng& rng);       // +U(-0.5,0.5)

// Per-symbol code length under a quantized Laplace: delta = value - mu.
// Returns -log2(F(delta+0.5) - F(delta-0.5)) elementwise, b floored by caller.
Var laplace_bits(const Var& delta, const Var& b);

// Tiny per-channel dense layers for the factorized hyper prior.
Var channel_affine(const Var& x, const Var& w, const Var& b);  // [C,A,N],[C,B,A],[C,B]->[C,B,N]
Var channel_scale_vec(const Var& x, const Var& s);             // [C,B,N]*[C,B]

// Plain-tensor helpers (no autograd).
Tensor reflect_pad_hw(const Tensor& x, int pad_right, int pad_bottom);
Tensor crop_tensor_hw(const Tensor& x, int h, int w);

}  // namespace bvc

#endif  // BVC_OPS_H_
