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
// Conditional compression of the current frame given six context maps (two
// directions, three scales). Contexts enter by channel concatenation only;
// there is no subtraction against a prediction anywhere in the transform.

#ifndef BVC_CONTEXTUAL_CODEC_H_
#define BVC_CONTEXTUAL_CODEC_H_

#include "bvc/context_mining.h"
#include "bvc/entropy.h"
#include "bvc/motion_codec.h"

namespace bvc {

struct ReconResult {
  Var x_hat;  // [3,H,W], clamped to [0,1]
  Var f_hat;  // [C_ref,H,W], taken after both U-blocks, before the output conv
};

// Two-level encoder-decoder refiner with skip connections.
class UBlock : public Module {
 public:
  UBlock(Rng& rng, int c);
  Var forward(const Var& x) const;

 private:
  Conv2d down1_, down2_;
  SubpixelUp up2_, up1_;
};

class ContextualCodec : public Module {
 public:
  ContextualCodec(Rng& rng, int trunk_ch, int latent_ch, int ctx_ch,
                  int ref_ch, int z_ch);

  struct EncodeOut {
    Var y_cont;   // [C_y, H/16, W/16] pre-round, symbol domain
    Var symbols;
  };
  EncodeOut encode(const Var& x, const ContextSet& ctx_f,
                   const ContextSet& ctx_b, double rate_idx) const;

  ReconResult decode(const Var& symbols, const ContextSet& ctx_f,
                     const ContextSet& ctx_b, double rate_idx, int frame_h,
                     int frame_w) const;

  Var enc_step(double rate_idx) const { return q_enc_.step(rate_idx); }
  Var dec_step(double rate_idx) const { return q_dec_.step(rate_idx); }
  int latent_channels() const { return latent_ch_; }

  // Entropy machinery for the contextual latent (hyper + spatial + temporal).
  HyperEncoder hyper_enc_;
  HyperDecoder hyper_dec_;
  FactorizedModel factorized_;
  ConditionalEntropy cond_;
  TemporalPriorNet tpn_;

 private:
  static void check_contexts(const Tensor& x, const ContextSet& cf,
                             const ContextSet& cb, int ctx_ch);

  int trunk_ch_, latent_ch_, ctx_ch_, ref_ch_;
  Conv2d g0_, g1_, g2_, g3_;
  ResidualBlock rb0_, rb1_;
  SubpixelUp u0_, u1_, u2_, u3_;
  Conv2d m1_, m2_, m3_;
  ResidualBlock urb1_, urb2_;
  UBlock ub1_, ub2_;
  Conv2d out_;
  QuantBank q_enc_, q_dec_;
};

}  // namespace bvc

#endif  // BVC_CONTEXTUAL_CODEC_H_
