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

#include "bvc/contextual_codec.h"

namespace bvc {

UBlock::UBlock(Rng& rng, int c)
    : down1_(rng, c, c, 3, 2, 1),
      down2_(rng, c, c, 3, 2, 1),
      up2_(rng, c, c),
      up1_(rng, c, c) {
  register_child("down1", &down1_);
  register_child("down2", &down2_);
  register_child("up2", &up2_);
  register_child("up1", &up1_);
}

Var UBlock::forward(const Var& x) const {
  Var d1 = leaky_relu(down1_.forward(x));
  Var d2 = leaky_relu(down2_.forward(d1));
  Var u2 = add(up2_.forward(d2), d1);
  Var u1 = add(up1_.forward(leaky_relu(u2)), x);
  return u1;
}

ContextualCodec::ContextualCodec(Rng& rng, int trunk_ch, int latent_ch,
                                 int ctx_ch, int ref_ch, int z_ch)
    : hyper_enc_(rng, latent_ch, z_ch),
      hyper_dec_(rng, z_ch, latent_ch),
      factorized_(rng, z_ch),
      cond_(rng, latent_ch, latent_ch, /*with_temporal=*/true),
      tpn_(rng, ctx_ch, latent_ch),
      trunk_ch_(trunk_ch),
      latent_ch_(latent_ch),
      ctx_ch_(ctx_ch),
      ref_ch_(ref_ch),
      g0_(rng, 3 + 2 * ctx_ch, trunk_ch, 3, 2, 1),
      g1_(rng, trunk_ch + 2 * ctx_ch, trunk_ch, 3, 2, 1),
      g2_(rng, trunk_ch + 2 * ctx_ch, trunk_ch, 3, 2, 1),
      g3_(rng, trunk_ch, latent_ch, 3, 2, 1),
      rb0_(rng, trunk_ch),
      rb1_(rng, trunk_ch),
      u0_(rng, latent_ch, trunk_ch),
      u1_(rng, trunk_ch, trunk_ch),
      u2_(rng, trunk_ch, trunk_ch),
      u3_(rng, trunk_ch, trunk_ch),
      m1_(rng, trunk_ch + 2 * ctx_ch, trunk_ch, 3, 1, 1),
      m2_(rng, trunk_ch + 2 * ctx_ch, trunk_ch, 3, 1, 1),
      m3_(rng, trunk_ch + 2 * ctx_ch, ref_ch, 3, 1, 1),
      urb1_(rng, trunk_ch),
      urb2_(rng, trunk_ch),
      ub1_(rng, ref_ch),
      ub2_(rng, ref_ch),
      out_(rng, ref_ch, 3, 3, 1, 1),
      q_enc_(rng, latent_ch, 2.0f, 0.4f),
      q_dec_(rng, latent_ch, 2.0f, 0.4f) {
  register_child("hyper_enc", &hyper_enc_);
  register_child("hyper_dec", &hyper_dec_);
  register_child("factorized", &factorized_);
  register_child("cond", &cond_);
  register_child("tpn", &tpn_);
  register_child("g0", &g0_);
  register_child("g1", &g1_);
  register_child("g2", &g2_);
  register_child("g3", &g3_);
  register_child("rb0", &rb0_);
  register_child("rb1", &rb1_);
  register_child("u0", &u0_);
  register_child("u1", &u1_);
  register_child("u2", &u2_);
  register_child("u3", &u3_);
  register_child("m1", &m1_);
  register_child("m2", &m2_);
  register_child("m3", &m3_);
  register_child("urb1", &urb1_);
  register_child("urb2", &urb2_);
  register_child("ub1", &ub1_);
  register_child("ub2", &ub2_);
  register_child("out", &out_);
  register_child("q_enc", &q_enc_);
  register_child("q_dec", &q_dec_);
}

void ContextualCodec::check_contexts(const Tensor& x, const ContextSet& cf,
                                     const ContextSet& cb, int ctx_ch) {
  const int h = x.dim(1), w = x.dim(2);
  check_arg(h % 16 == 0 && w % 16 == 0,
            "contextual codec: resolution must be padded to multiples of 16");
  for (const ContextSet* c : {&cf, &cb}) {
    check_arg(c->c0.value().shape() == std::vector<int>{ctx_ch, h, w},
              "context c0 resolution mismatch");
    check_arg(c->c1.value().shape() == std::vector<int>{ctx_ch, h / 2, w / 2},
              "context c1 resolution mismatch");
    check_arg(c->c2.value().shape() == std::vector<int>{ctx_ch, h / 4, w / 4},
              "context c2 resolution mismatch");
  }
}

ContextualCodec::EncodeOut ContextualCodec::encode(const Var& x,
                                                   const ContextSet& ctx_f,
                                                   const ContextSet& ctx_b,
                                                   double rate_idx) const {
  check_arg(x.value().ndim() == 3 && x.value().dim(0) == 3,
            "encode_frame: expected [3,H,W]");
  check_contexts(x.value(), ctx_f, ctx_b, ctx_ch_);

  Var h = leaky_relu(g0_.forward(concat_ch({x, ctx_f.c0, ctx_b.c0})));
  h = rb0_.forward(h);                                        // H/2
  h = leaky_relu(g1_.forward(concat_ch({h, ctx_f.c1, ctx_b.c1})));
  h = rb1_.forward(h);                                        // H/4
  h = leaky_relu(g2_.forward(concat_ch({h, ctx_f.c2, ctx_b.c2})));
  Var y = g3_.forward(h);                                     // H/16

  EncodeOut out;
  out.y_cont = channel_scale(y, reciprocal(q_enc_.step(rate_idx)));
  out.symbols = round_ste(out.y_cont);
  return out;
}

ReconResult ContextualCodec::decode(const Var& symbols, const ContextSet& ctx_f,
                                    const ContextSet& ctx_b, double rate_idx,
                                    int frame_h, int frame_w) const {
  const Tensor& sv = symbols.value();
  check_stream(sv.ndim() == 3 && sv.dim(0) == latent_ch_ &&
                   sv.dim(1) == frame_h / 16 && sv.dim(2) == frame_w / 16,
               "contextual latent shape does not match the declared frame size");

  Var deq = channel_scale(symbols, q_dec_.step(rate_idx));
  Var h = leaky_relu(u0_.forward(deq));                       // H/8
  h = u1_.forward(h);                                         // H/4
  h = urb1_.forward(m1_.forward(concat_ch({h, ctx_f.c2, ctx_b.c2})));
  h = u2_.forward(h);                                         // H/2
  h = urb2_.forward(m2_.forward(concat_ch({h, ctx_f.c1, ctx_b.c1})));
  h = u3_.forward(h);                                         // H
  h = m3_.forward(concat_ch({h, ctx_f.c0, ctx_b.c0}));
  h = ub2_.forward(ub1_.forward(h));

  ReconResult out;
  out.f_hat = h;
  out.x_hat = clamp(add_scalar(out_.forward(h), 0.5f), 0.0f, 1.0f);
  return out;
}

}  // namespace bvc
