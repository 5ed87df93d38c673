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

#include "bvc/iframe_codec.h"

namespace bvc {

IframeCodec::IframeCodec(Rng& rng, int trunk_ch, int latent_ch, int z_ch)
    : hyper_enc_(rng, latent_ch, z_ch),
      hyper_dec_(rng, z_ch, latent_ch),
      factorized_(rng, z_ch),
      cond_(rng, latent_ch, latent_ch, /*with_temporal=*/false),
      trunk_ch_(trunk_ch),
      latent_ch_(latent_ch),
      e0_(rng, 3, trunk_ch, 3, 2, 1),
      e1_(rng, trunk_ch, trunk_ch, 3, 2, 1),
      e2_(rng, trunk_ch, trunk_ch, 3, 2, 1),
      e3_(rng, trunk_ch, latent_ch, 3, 2, 1),
      rb_e_(rng, trunk_ch),
      d0_(rng, latent_ch, trunk_ch),
      d1_(rng, trunk_ch, trunk_ch),
      d2_(rng, trunk_ch, trunk_ch),
      d3_(rng, trunk_ch, trunk_ch),
      rb_d_(rng, trunk_ch),
      out_(rng, trunk_ch, 3, 3, 1, 1),
      q_enc_(rng, latent_ch, 2.0f, 0.4f),
      q_dec_(rng, latent_ch, 2.0f, 0.4f) {
  register_child("hyper_enc", &hyper_enc_);
  register_child("hyper_dec", &hyper_dec_);
  register_child("factorized", &factorized_);
  register_child("cond", &cond_);
  register_child("e0", &e0_);
  register_child("e1", &e1_);
  register_child("e2", &e2_);
  register_child("e3", &e3_);
  register_child("rb_e", &rb_e_);
  register_child("d0", &d0_);
  register_child("d1", &d1_);
  register_child("d2", &d2_);
  register_child("d3", &d3_);
  register_child("rb_d", &rb_d_);
  register_child("out", &out_);
  register_child("q_enc", &q_enc_);
  register_child("q_dec", &q_dec_);
}

IframeCodec::EncodeOut IframeCodec::encode(const Var& x,
                                           double rate_idx) const {
  check_arg(x.value().ndim() == 3 && x.value().dim(0) == 3,
            "iframe encode: expected [3,H,W]");
  check_arg(x.value().dim(1) % 16 == 0 && x.value().dim(2) % 16 == 0,
            "iframe encode: resolution must be padded to multiples of 16");
  Var h = leaky_relu(e0_.forward(x));
  h = rb_e_.forward(h);
  h = leaky_relu(e1_.forward(h));
  h = leaky_relu(e2_.forward(h));
  Var y = e3_.forward(h);

  EncodeOut out;
  out.y_cont = channel_scale(y, reciprocal(q_enc_.step(rate_idx)));
  out.symbols = round_ste(out.y_cont);
  return out;
}

Var IframeCodec::decode(const Var& symbols, double rate_idx, int frame_h,
                        int frame_w) const {
  const Tensor& sv = symbols.value();
  check_stream(sv.ndim() == 3 && sv.dim(0) == latent_ch_ &&
                   sv.dim(1) == frame_h / 16 && sv.dim(2) == frame_w / 16,
               "iframe latent shape does not match the declared frame size");
  Var deq = channel_scale(symbols, q_dec_.step(rate_idx));
  Var h = leaky_relu(d0_.forward(deq));
  h = leaky_relu(d1_.forward(h));
  h = rb_d_.forward(h);
  h = leaky_relu(d2_.forward(h));
  h = d3_.forward(h);
  return clamp(add_scalar(out_.forward(h), 0.5f), 0.0f, 1.0f);
}

}  // namespace bvc
