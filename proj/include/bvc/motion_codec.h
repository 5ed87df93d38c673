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
//
// Joint compression of the concatenated bi-directional motion-vector
// differences. Reference frames hand their decoder-side motion features to
// successors; a per-case motion feature adaptor (MFA) fuses whatever is
// available at the quarter-resolution stage of both transforms.

#ifndef BVC_MOTION_CODEC_H_
#define BVC_MOTION_CODEC_H_

#include "bvc/entropy.h"
#include "bvc/flow.h"
#include "bvc/gop.h"

namespace bvc {

// Decoder-side features entering the last sub-pixel layers, one per
// direction. Detached from any graph: references are constants downstream.
struct MotionDiffContext {
  Tensor m_f;  // [C_mc, H/4, W/4]
  Tensor m_b;
};

// Reference contexts offered to the codec; presence must match the case.
struct MotionContexts {
  const MotionDiffContext* fwd = nullptr;
  const MotionDiffContext* bwd = nullptr;
  bool zeroed = false;  // ablation hook: keep dispatch, feed zeros
};

// Scale -> round -> inverse-scale; straight-through in train mode. The rate
// path's additive noise lives in the entropy model, in symbol units.
Var apply_quant(const Var& values, const Var& q, bool train);

// Strictly decreasing step with rate index (log-domain cumulative softplus);
// fractional indices interpolate log-linearly.
class QuantBank : public Module {
 public:
  QuantBank(Rng& rng, int channels, float coarsest, float finest);
  Var step(double rate_idx) const;  // [C]
  static constexpr int kRatePoints = 4;

 private:
  Param* base_;
  Param* deltas_[kRatePoints - 1];
};

class MotionCodec : public Module {
 public:
  MotionCodec(Rng& rng, int trunk_ch, int latent_ch, int ctx_ch, int z_ch);

  struct EncodeOut {
    Var y_cont;   // pre-round symbol-domain latent [C_m, H/16, W/16]
    Var symbols;  // rounded (straight-through when recording gradients)
  };
  // r_tf, r_tb: [2,H,W] with H,W multiples of 16.
  EncodeOut encode(const Var& r_tf, const Var& r_tb, const MotionContexts& ctx,
                   RefCase c, double rate_idx) const;

  struct DecodeOut {
    Var rhat_tf, rhat_tb;  // [2,H,W]
    Var ctx_f, ctx_b;      // this frame's motion-difference contexts
  };
  DecodeOut decode(const Var& symbols, const MotionContexts& ctx, RefCase c,
                   double rate_idx, int frame_h, int frame_w) const;

  Var enc_step(double rate_idx) const { return q_enc_.step(rate_idx); }
  Var dec_step(double rate_idx) const { return q_dec_.step(rate_idx); }

  int latent_channels() const { return latent_ch_; }
  int ctx_channels() const { return ctx_ch_; }

  // Entropy machinery for the motion latent (hyper + spatial priors).
  HyperEncoder hyper_enc_;
  HyperDecoder hyper_dec_;
  FactorizedModel factorized_;
  ConditionalEntropy cond_;

 private:
  Var fuse_contexts(const Var& feat, const MotionContexts& ctx, RefCase c,
                    bool encoder_side) const;

  int trunk_ch_, latent_ch_, ctx_ch_;
  Conv2d e0_, e1_, e2_, e3_;
  ResidualBlock rb_e_;
  BottleneckBlock mfa_enc0_, mfa_enc1_, mfa_enc2_, mfa_enc3_;
  SubpixelUp d0_, d1_;
  ResidualBlock rb_d_;
  BottleneckBlock mfa_dec0_, mfa_dec1_, mfa_dec2_, mfa_dec3_;
  Conv2d ctx_head_f_, ctx_head_b_;
  Conv2d subp_f_, subp_b_;  // last sub-pixel layers (followed by shuffle x4)
  QuantBank q_enc_, q_dec_;
};

}  // namespace bvc

#endif  // BVC_MOTION_CODEC_H_
