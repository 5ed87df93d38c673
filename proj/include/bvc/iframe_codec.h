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

#ifndef BVC_IFRAME_CODEC_H_
#define BVC_IFRAME_CODEC_H_

#include "bvc/entropy.h"
#include "bvc/motion_codec.h"

namespace bvc {

// Minimal learned hyperprior image codec for the layer-0 frames; shares the
// video codec's rate-point grid through its own quantization-step banks.
class IframeCodec : public Module {
 public:
  IframeCodec(Rng& rng, int trunk_ch, int latent_ch, int z_ch);

  struct EncodeOut {
    Var y_cont;
    Var symbols;
  };
  EncodeOut encode(const Var& x, double rate_idx) const;
  Var decode(const Var& symbols, double rate_idx, int frame_h,
             int frame_w) const;

  Var enc_step(double rate_idx) const { return q_enc_.step(rate_idx); }
  Var dec_step(double rate_idx) const { return q_dec_.step(rate_idx); }
  int latent_channels() const { return latent_ch_; }

  HyperEncoder hyper_enc_;
  HyperDecoder hyper_dec_;
  FactorizedModel factorized_;
  ConditionalEntropy cond_;

 private:
  int trunk_ch_, latent_ch_;
  Conv2d e0_, e1_, e2_, e3_;
  ResidualBlock rb_e_;
  SubpixelUp d0_, d1_, d2_, d3_;
  ResidualBlock rb_d_;
  Conv2d out_;
  QuantBank q_enc_, q_dec_;
};

}  // namespace bvc

#endif  // BVC_IFRAME_CODEC_H_
