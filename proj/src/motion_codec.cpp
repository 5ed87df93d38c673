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

#include "bvc/motion_codec.h"

#include <cmath>

namespace bvc {

Var apply_quant(const Var& values, const Var& q, bool train) {
  check_arg(q.value().ndim() == 1 &&
                q.value().dim(0) == values.value().dim(0),
            "apply_quant: per-channel step expected");
  for (size_t i = 0; i < q.value().numel(); ++i)
    check_arg(q.value()[i] > 0.0f, "apply_quant: step must be positive");
  Var scaled = channel_scale(values, reciprocal(q));
  Var rounded = round_ste(scaled);
  if (!train) {
    // identical values; drops the straight-through tape
    NoGradGuard g;
    return channel_scale(Var(rounded.value()), Var(q.value()));
  }
  return channel_scale(rounded, q);
}

QuantBank::QuantBank(Rng& rng, int channels, float coarsest, float finest) {
  (void)rng;
  check_arg(coarsest > finest && finest > 0.0f, "quant bank: need coarse > fine > 0");
  base_ = register_param("base", Tensor::full({channels}, std::log(coarsest)));
  // softplus(raw) = per-point log decrement toward the finest step
  const float dec = (std::log(coarsest) - std::log(finest)) / (kRatePoints - 1);
  const float raw = std::log(std::expm1(dec));
  for (int i = 0; i < kRatePoints - 1; ++i)
    deltas_[i] = register_param("delta" + std::to_string(i),
                                Tensor::full({channels}, raw));
}

Var QuantBank::step(double rate_idx) const {
  check_arg(rate_idx >= 0.0 && rate_idx <= kRatePoints - 1,
            "rate_idx out of range");
  const int lo = std::min(static_cast<int>(rate_idx), kRatePoints - 2);
  const float frac = static_cast<float>(rate_idx - lo);
  // log step at point i: base - sum_{j<i} softplus(delta_j)
  Var log_q = base_->var;
  for (int j = 0; j < lo; ++j) log_q = sub(log_q, softplus(deltas_[j]->var));
  if (frac > 0.0f)
    log_q = sub(log_q, mul_scalar(softplus(deltas_[lo]->var), frac));
  return exp_op(log_q);
}

MotionCodec::MotionCodec(Rng& rng, int trunk_ch, int latent_ch, int ctx_ch,
                         int z_ch)
    : hyper_enc_(rng, latent_ch, z_ch),
      hyper_dec_(rng, z_ch, latent_ch),
      factorized_(rng, z_ch),
      cond_(rng, latent_ch, latent_ch, /*with_temporal=*/false),
      trunk_ch_(trunk_ch),
      latent_ch_(latent_ch),
      ctx_ch_(ctx_ch),
      e0_(rng, 4, trunk_ch, 3, 2, 1),
      e1_(rng, trunk_ch, trunk_ch, 3, 2, 1),
      e2_(rng, trunk_ch, trunk_ch, 3, 2, 1),
      e3_(rng, trunk_ch, latent_ch, 3, 2, 1),
      rb_e_(rng, trunk_ch),
      mfa_enc0_(rng, trunk_ch, trunk_ch),
      mfa_enc1_(rng, trunk_ch + 2 * ctx_ch, trunk_ch),
      mfa_enc2_(rng, trunk_ch + 2 * ctx_ch, trunk_ch),
      mfa_enc3_(rng, trunk_ch + 4 * ctx_ch, trunk_ch),
      d0_(rng, latent_ch, trunk_ch),
      d1_(rng, trunk_ch, trunk_ch),
      rb_d_(rng, trunk_ch),
      mfa_dec0_(rng, trunk_ch, trunk_ch),
      mfa_dec1_(rng, trunk_ch + 2 * ctx_ch, trunk_ch),
      mfa_dec2_(rng, trunk_ch + 2 * ctx_ch, trunk_ch),
      mfa_dec3_(rng, trunk_ch + 4 * ctx_ch, trunk_ch),
      ctx_head_f_(rng, trunk_ch, ctx_ch, 3, 1, 1),
      ctx_head_b_(rng, trunk_ch, ctx_ch, 3, 1, 1),
      subp_f_(rng, ctx_ch, 2 * 16, 3, 1, 1, 0.1f),
      subp_b_(rng, ctx_ch, 2 * 16, 3, 1, 1, 0.1f),
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
  register_child("mfa_enc0", &mfa_enc0_);
  register_child("mfa_enc1", &mfa_enc1_);
  register_child("mfa_enc2", &mfa_enc2_);
  register_child("mfa_enc3", &mfa_enc3_);
  register_child("d0", &d0_);
  register_child("d1", &d1_);
  register_child("rb_d", &rb_d_);
  register_child("mfa_dec0", &mfa_dec0_);
  register_child("mfa_dec1", &mfa_dec1_);
  register_child("mfa_dec2", &mfa_dec2_);
  register_child("mfa_dec3", &mfa_dec3_);
  register_child("ctx_head_f", &ctx_head_f_);
  register_child("ctx_head_b", &ctx_head_b_);
  register_child("subp_f", &subp_f_);
  register_child("subp_b", &subp_b_);
  register_child("q_enc", &q_enc_);
  register_child("q_dec", &q_dec_);
}

namespace {

void check_context_presence(const MotionContexts& ctx, RefCase c) {
  switch (c) {
    case RefCase::kII:
      check_arg(!ctx.fwd && !ctx.bwd, "case II takes no motion contexts");
      return;
    case RefCase::kIB:
      check_arg(!ctx.fwd && ctx.bwd, "case IB takes backward contexts only");
      return;
    case RefCase::kBI:
      check_arg(ctx.fwd && !ctx.bwd, "case BI takes forward contexts only");
      return;
    case RefCase::kBB:
      check_arg(ctx.fwd && ctx.bwd, "case BB takes both reference contexts");
      return;
  }
}

Var ctx_var(const Tensor& t, bool zeroed) {
  return zeroed ? Var(Tensor::zeros(t.shape())) : Var(t);
}

}  // namespace

Var MotionCodec::fuse_contexts(const Var& feat, const MotionContexts& ctx,
                               RefCase c, bool encoder_side) const {
  const BottleneckBlock* mfa[4] = {
      encoder_side ? &mfa_enc0_ : &mfa_dec0_,
      encoder_side ? &mfa_enc1_ : &mfa_dec1_,
      encoder_side ? &mfa_enc2_ : &mfa_dec2_,
      encoder_side ? &mfa_enc3_ : &mfa_dec3_,
  };
  switch (c) {
    case RefCase::kII:
      return mfa[0]->forward(feat);
    case RefCase::kIB:
      return mfa[1]->forward(concat_ch({feat, ctx_var(ctx.bwd->m_f, ctx.zeroed),
                                        ctx_var(ctx.bwd->m_b, ctx.zeroed)}));
    case RefCase::kBI:
      return mfa[2]->forward(concat_ch({feat, ctx_var(ctx.fwd->m_f, ctx.zeroed),
                                        ctx_var(ctx.fwd->m_b, ctx.zeroed)}));
    case RefCase::kBB:
      return mfa[3]->forward(concat_ch({feat, ctx_var(ctx.fwd->m_f, ctx.zeroed),
                                        ctx_var(ctx.fwd->m_b, ctx.zeroed),
                                        ctx_var(ctx.bwd->m_f, ctx.zeroed),
                                        ctx_var(ctx.bwd->m_b, ctx.zeroed)}));
  }
  throw std::invalid_argument("unknown reference case");
}

MotionCodec::EncodeOut MotionCodec::encode(const Var& r_tf, const Var& r_tb,
                                           const MotionContexts& ctx, RefCase c,
                                           double rate_idx) const {
  check_context_presence(ctx, c);
  const Tensor& rv = r_tf.value();
  check_arg(rv.ndim() == 3 && rv.dim(0) == 2 && rv.same_shape(r_tb.value()),
            "encode_motion: expected two [2,H,W] difference fields");
  check_arg(rv.dim(1) % 16 == 0 && rv.dim(2) % 16 == 0,
            "encode_motion: resolution must be padded to multiples of 16");

  Var h = leaky_relu(e0_.forward(concat_ch({r_tf, r_tb})));
  h = leaky_relu(e1_.forward(h));            // H/4
  h = fuse_contexts(h, ctx, c, /*encoder_side=*/true);
  h = rb_e_.forward(h);
  h = leaky_relu(e2_.forward(h));            // H/8
  Var y = e3_.forward(h);                    // [C_m, H/16, W/16]

  EncodeOut out;
  out.y_cont = channel_scale(y, reciprocal(q_enc_.step(rate_idx)));
  out.symbols = round_ste(out.y_cont);
  return out;
}

MotionCodec::DecodeOut MotionCodec::decode(const Var& symbols,
                                           const MotionContexts& ctx, RefCase c,
                                           double rate_idx, int frame_h,
                                           int frame_w) const {
  check_context_presence(ctx, c);
  const Tensor& sv = symbols.value();
  check_stream(sv.ndim() == 3 && sv.dim(0) == latent_ch_ &&
                   sv.dim(1) == frame_h / 16 && sv.dim(2) == frame_w / 16,
               "motion latent shape does not match the declared frame size");

  Var deq = channel_scale(symbols, q_dec_.step(rate_idx));
  Var h = leaky_relu(d0_.forward(deq));      // H/8
  h = d1_.forward(h);                        // H/4
  h = fuse_contexts(h, ctx, c, /*encoder_side=*/false);
  h = rb_d_.forward(h);

  DecodeOut out;
  out.ctx_f = ctx_head_f_.forward(h);
  out.ctx_b = ctx_head_b_.forward(h);
  out.rhat_tf = pixel_shuffle(subp_f_.forward(out.ctx_f), 4);
  out.rhat_tb = pixel_shuffle(subp_b_.forward(out.ctx_b), 4);
  return out;
}

}  // namespace bvc
