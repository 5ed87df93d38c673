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

#include "bvc/entropy.h"

#include <cmath>

namespace bvc {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double softplus_d(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double laplace_cdf(double x, double b) {
  return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

}  // namespace

double laplace_bin_prob(double delta, double b) {
  if (b < kLaplaceScaleFloor) b = kLaplaceScaleFloor;
  const double ad = std::abs(delta);
  if (ad >= 0.5) {
    const double u = 0.5 / b;
    // exp(-ad/b)*sinh(u), assembled in log domain against underflow
    const double lsinh = u + std::log1p(-std::exp(-2.0 * u)) - kLn2;
    return std::exp(-ad / b + lsinh);
  }
  const double p = 1.0 - std::exp(-0.5 / b) * std::cosh(delta / b);
  return p > 0.0 ? p : 0.0;
}

FreqTable laplace_freq_table(double mu, double b) {
  if (b < kLaplaceScaleFloor) b = kLaplaceScaleFloor;
  std::vector<double> pmf(kTableSize);
  for (int k = -kSymbolMax; k <= kSymbolMax; ++k)
    pmf[static_cast<size_t>(k + kSymbolMax)] = laplace_bin_prob(k - mu, b);
  const double lo_tail = laplace_cdf(-kSymbolMax - 0.5 - mu, b);
  const double hi_tail = 1.0 - laplace_cdf(kSymbolMax + 0.5 - mu, b);
  pmf[kEscapeIndex] = std::max(0.0, lo_tail + hi_tail);
  return quantize_pmf(pmf);
}

void code_raw_value(RangeEncoder* enc, int32_t v) {
  uint32_t u = (static_cast<uint32_t>(v) << 1) ^
               static_cast<uint32_t>(v >> 31);  // zigzag
  while (true) {
    uint32_t byte = u & 0x7F;
    u >>= 7;
    if (u != 0) byte |= 0x80;
    enc->encode(byte << 8, 256, kProbTotal);
    if (u == 0) break;
  }
}

int32_t decode_raw_value(RangeDecoder* dec) {
  uint32_t u = 0;
  int shift = 0;
  while (true) {
    const uint32_t byte = dec->decode_target(kProbTotal) >> 8;
    dec->decode_update(byte << 8, 256, kProbTotal);
    u |= (byte & 0x7F) << shift;
    if (!(byte & 0x80)) break;
    shift += 7;
    check_stream(shift < 35, "raw value varint overlong");
  }
  return static_cast<int32_t>((u >> 1) ^ (~(u & 1) + 1));
}

Tensor group_mask(int group, int h, int w) {
  Tensor m({1, h, w});
  for (int y = kGroupPhaseY[group]; y < h; y += 2)
    for (int x = kGroupPhaseX[group]; x < w; x += 2) m.at(0, y, x) = 1.0f;
  return m;
}

// ---------------------------------------------------------------------------
// FactorizedModel

FactorizedModel::FactorizedModel(Rng& rng, int channels)
    : channels_(channels) {
  auto init = [&](std::vector<int> shape, float mean, float dev) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(mean, dev);
    return t;
  };
  w1_ = register_param("w1", init({channels, 3, 1}, 0.5f, 0.1f));
  b1_ = register_param("b1", init({channels, 3}, 0.0f, 0.5f));
  a1_ = register_param("a1", init({channels, 3}, 0.0f, 0.1f));
  w2_ = register_param("w2", init({channels, 3, 3}, 0.0f, 0.3f));
  b2_ = register_param("b2", init({channels, 3}, 0.0f, 0.5f));
  a2_ = register_param("a2", init({channels, 3}, 0.0f, 0.1f));
  w3_ = register_param("w3", init({channels, 1, 3}, 0.0f, 0.3f));
  b3_ = register_param("b3", init({channels, 1}, 0.0f, 0.1f));
}

Var FactorizedModel::cdf(const Var& x) const {
  check_arg(x.value().ndim() == 2 && x.value().dim(0) == channels_,
            "factorized cdf: expected [C,N]");
  const int n = x.value().dim(1);
  Var u = reshape(x, {channels_, 1, n});
  u = channel_affine(u, softplus(w1_->var), b1_->var);
  u = add(u, channel_scale_vec(tanh_op(u), tanh_op(a1_->var)));
  u = channel_affine(u, softplus(w2_->var), b2_->var);
  u = add(u, channel_scale_vec(tanh_op(u), tanh_op(a2_->var)));
  u = channel_affine(u, softplus(w3_->var), b3_->var);
  return reshape(sigmoid(u), {channels_, n});
}

Var FactorizedModel::bits(const Var& x) const {
  Var hi = cdf(add_scalar(x, 0.5f));
  Var lo = cdf(add_scalar(x, -0.5f));
  // floor at the float32 cancellation noise of the CDF difference
  Var p = clamp(sub(hi, lo), 1e-6f, 1.0f);
  return mul_scalar(log_op(p), static_cast<float>(-1.0 / kLn2));
}

double FactorizedModel::cdf_value(int channel, double x) const {
  const Tensor& w1 = w1_->var.value();
  const Tensor& b1 = b1_->var.value();
  const Tensor& a1 = a1_->var.value();
  const Tensor& w2 = w2_->var.value();
  const Tensor& b2 = b2_->var.value();
  const Tensor& a2 = a2_->var.value();
  const Tensor& w3 = w3_->var.value();
  const Tensor& b3 = b3_->var.value();
  const int c = channel;
  double u1[3], u2[3];
  for (int j = 0; j < 3; ++j) {
    const double v = softplus_d(w1[(c * 3 + j) * 1]) * x + b1[c * 3 + j];
    u1[j] = v + std::tanh(static_cast<double>(a1[c * 3 + j])) * std::tanh(v);
  }
  for (int j = 0; j < 3; ++j) {
    double v = b2[c * 3 + j];
    for (int k = 0; k < 3; ++k) v += softplus_d(w2[(c * 3 + j) * 3 + k]) * u1[k];
    u2[j] = v + std::tanh(static_cast<double>(a2[c * 3 + j])) * std::tanh(v);
  }
  double v = b3[c];
  for (int k = 0; k < 3; ++k) v += softplus_d(w3[c * 3 + k]) * u2[k];
  return 1.0 / (1.0 + std::exp(-v));
}

FreqTable FactorizedModel::freq_table(int channel) const {
  std::vector<double> pmf(kTableSize);
  double prev = cdf_value(channel, -kSymbolMax - 0.5);
  const double lo_tail = prev;
  for (int k = -kSymbolMax; k <= kSymbolMax; ++k) {
    const double cur = cdf_value(channel, k + 0.5);
    pmf[static_cast<size_t>(k + kSymbolMax)] = std::max(0.0, cur - prev);
    prev = cur;
  }
  pmf[kEscapeIndex] = std::max(0.0, lo_tail + 1.0 - prev);
  return quantize_pmf(pmf);
}

// ---------------------------------------------------------------------------
// Hyper transforms

HyperEncoder::HyperEncoder(Rng& rng, int latent_ch, int z_ch)
    : c0_(rng, latent_ch, z_ch, 3, 1, 1),
      c1_(rng, z_ch, z_ch, 3, 2, 1),
      c2_(rng, z_ch, z_ch, 3, 2, 1) {
  register_child("c0", &c0_);
  register_child("c1", &c1_);
  register_child("c2", &c2_);
}

Var HyperEncoder::forward(const Var& y) const {
  return c2_.forward(leaky_relu(c1_.forward(leaky_relu(c0_.forward(y)))));
}

HyperDecoder::HyperDecoder(Rng& rng, int z_ch, int hyper_ch)
    : up0_(rng, z_ch, z_ch), up1_(rng, z_ch, hyper_ch),
      c2_(rng, hyper_ch, hyper_ch, 3, 1, 1) {
  register_child("up0", &up0_);
  register_child("up1", &up1_);
  register_child("c2", &c2_);
}

Var HyperDecoder::forward(const Var& z, int target_h, int target_w) const {
  Var h = leaky_relu(up0_.forward(z));
  h = leaky_relu(up1_.forward(h));
  check_arg(h.value().dim(1) >= target_h && h.value().dim(2) >= target_w,
            "hyper decoder: target larger than upsampled grid");
  return c2_.forward(crop_hw(h, target_h, target_w));
}

ChunkStats encode_hyper(const Tensor& z_sym, const FactorizedModel& fm,
                        RangeEncoder* enc) {
  check_arg(z_sym.ndim() == 3 && z_sym.dim(0) == fm.channels(),
            "encode_hyper: shape mismatch");
  ChunkStats stats;
  const int c = z_sym.dim(0), h = z_sym.dim(1), w = z_sym.dim(2);
  for (int cc = 0; cc < c; ++cc) {
    const FreqTable table = fm.freq_table(cc);
    stats.underflow_flagged += table.floored;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float fs = z_sym.at(cc, y, x);
        check_arg(std::isfinite(fs), "encode_hyper: non-finite symbol");
        const int32_t s = static_cast<int32_t>(fs);
        if (s >= -kSymbolMax && s <= kSymbolMax) {
          const int idx = s + kSymbolMax;
          enc->encode(table.cum[idx], table.freq(idx), kProbTotal);
          stats.estimated_bits += table.bits(idx);
        } else {
          enc->encode(table.cum[kEscapeIndex], table.freq(kEscapeIndex),
                      kProbTotal);
          code_raw_value(enc, s);
          stats.estimated_bits += table.bits(kEscapeIndex) + 8.0 * 5;
          ++stats.escape_count;
        }
      }
  }
  return stats;
}

Tensor decode_hyper(const std::vector<int>& shape, const FactorizedModel& fm,
                    RangeDecoder* dec, ChunkStats* stats) {
  check_arg(shape.size() == 3 && shape[0] == fm.channels(),
            "decode_hyper: shape mismatch");
  Tensor z(shape);
  for (int cc = 0; cc < shape[0]; ++cc) {
    const FreqTable table = fm.freq_table(cc);
    for (int y = 0; y < shape[1]; ++y)
      for (int x = 0; x < shape[2]; ++x) {
        const int idx = table.find(dec->decode_target(kProbTotal));
        dec->decode_update(table.cum[idx], table.freq(idx), kProbTotal);
        int32_t s;
        if (idx == kEscapeIndex) {
          s = decode_raw_value(dec);
          if (stats) ++stats->escape_count;
        } else {
          s = idx - kSymbolMax;
        }
        z.at(cc, y, x) = static_cast<float>(s);
      }
  }
  return z;
}

Var hyper_bits(const Var& z_noisy, const FactorizedModel& fm) {
  const Tensor& zv = z_noisy.value();
  check_arg(zv.ndim() == 3, "hyper_bits: need [C,h,w]");
  Var flat = reshape(z_noisy, {zv.dim(0), zv.dim(1) * zv.dim(2)});
  return sum_all(fm.bits(flat));
}

// ---------------------------------------------------------------------------
// TemporalPriorNet

TemporalPriorNet::TemporalPriorNet(Rng& rng, int ctx_ch, int latent_ch)
    : down0_(rng, 2 * ctx_ch, latent_ch, 3, 2, 1),
      down1_(rng, latent_ch, latent_ch, 3, 2, 1),
      pfa0_(rng, latent_ch, latent_ch),
      pfa1_(rng, 2 * latent_ch, latent_ch),
      pfa2_(rng, 2 * latent_ch, latent_ch),
      pfa3_(rng, 3 * latent_ch, latent_ch),
      refine0_(rng, latent_ch, latent_ch),
      refine1_(rng, latent_ch, latent_ch) {
  register_child("down0", &down0_);
  register_child("down1", &down1_);
  register_child("pfa0", &pfa0_);
  register_child("pfa1", &pfa1_);
  register_child("pfa2", &pfa2_);
  register_child("pfa3", &pfa3_);
  register_child("refine0", &refine0_);
  register_child("refine1", &refine1_);
}

Var TemporalPriorNet::fuse(const Var& cf2, const Var& cb2, const Var* y_f,
                           const Var* y_b, RefCase c) const {
  check_arg(cf2.value().same_shape(cb2.value()),
            "temporal prior: context shape mismatch");
  switch (c) {
    case RefCase::kII:
      check_arg(!y_f && !y_b, "case II consumes no reference latents");
      break;
    case RefCase::kIB:
      check_arg(!y_f && y_b, "case IB consumes the backward latent only");
      break;
    case RefCase::kBI:
      check_arg(y_f && !y_b, "case BI consumes the forward latent only");
      break;
    case RefCase::kBB:
      check_arg(y_f && y_b, "case BB consumes both reference latents");
      break;
  }
  Var cfb = down1_.forward(leaky_relu(down0_.forward(concat_ch({cf2, cb2}))));
  Var fused;
  switch (c) {
    case RefCase::kII:
      fused = pfa0_.forward(cfb);
      break;
    case RefCase::kIB:
      fused = pfa1_.forward(concat_ch({cfb, *y_b}));
      break;
    case RefCase::kBI:
      fused = pfa2_.forward(concat_ch({cfb, *y_f}));
      break;
    case RefCase::kBB:
      fused = pfa3_.forward(concat_ch({cfb, *y_f, *y_b}));
      break;
  }
  return refine1_.forward(refine0_.forward(fused));
}

// ---------------------------------------------------------------------------
// ConditionalEntropy

ConditionalEntropy::ConditionalEntropy(Rng& rng, int latent_ch, int hyper_ch,
                                       bool with_temporal)
    : with_temporal_(with_temporal),
      sctx_(rng, latent_ch + 1, latent_ch, 3, 1, 1),
      fuse_(rng, hyper_ch + latent_ch + (with_temporal ? latent_ch : 0),
            latent_ch),
      head_(rng, latent_ch, 2 * latent_ch, 1, 1, 0) {
  register_child("sctx", &sctx_);
  register_child("fuse", &fuse_);
  register_child("head", &head_);
}

LaplaceParams ConditionalEntropy::params(const Var& hyper_feat,
                                         const Var* temporal_prior,
                                         const Var& partial_deq,
                                         const Var& mask) const {
  check_arg(with_temporal_ == (temporal_prior != nullptr),
            "conditional entropy: temporal prior presence mismatch");
  const int c = partial_deq.value().dim(0);
  Var sfeat = sctx_.forward(concat_ch({partial_deq, mask}));
  std::vector<Var> inputs = {hyper_feat};
  if (temporal_prior) inputs.push_back(*temporal_prior);
  inputs.push_back(sfeat);
  Var h = fuse_.forward(concat_ch(inputs));
  Var out = head_.forward(h);
  LaplaceParams p;
  p.mu = slice_ch(out, 0, c);
  p.b = add_scalar(softplus(slice_ch(out, c, 2 * c)), kLaplaceScaleFloor);
  return p;
}

Var ConditionalEntropy::train_bits(const Var& y_cont, const Var& symbols_ste,
                                   const Var& q_dec, const Var& hyper_feat,
                                   const Var* temporal_prior, Rng& rng) const {
  const Tensor& yv = y_cont.value();
  const int c = yv.dim(0), h = yv.dim(1), w = yv.dim(2);
  Var y_noisy = add_uniform_noise(y_cont, rng);
  Var deq_ste = channel_scale(symbols_ste, q_dec);
  Var partial(Tensor::zeros({c, h, w}));
  Var mask(Tensor::zeros({1, h, w}));
  Var total;
  for (int g = 0; g < kNumGroups; ++g) {
    Var gm(group_mask(g, h, w));
    LaplaceParams p = params(hyper_feat, temporal_prior, partial, mask);
    Var bits = laplace_bits(sub(y_noisy, p.mu), p.b);
    Var gbits = sum_all(mul_ch_bcast(bits, gm));
    total = total.defined() ? add(total, gbits) : gbits;
    partial = add(partial, mul_ch_bcast(deq_ste, gm));
    mask = add(mask, gm);
  }
  return total;
}

ChunkStats ConditionalEntropy::encode_latent(const Tensor& symbols,
                                             const Tensor& q_dec,
                                             const Tensor& hyper_feat,
                                             const Tensor* temporal_prior,
                                             RangeEncoder* enc) const {
  NoGradGuard ng;
  ChunkStats stats;
  const int c = symbols.dim(0), h = symbols.dim(1), w = symbols.dim(2);
  Tensor partial = Tensor::zeros({c, h, w});
  Tensor mask = Tensor::zeros({1, h, w});
  Var hv(hyper_feat);
  Var tv;
  if (temporal_prior) tv = Var(*temporal_prior);
  for (int g = 0; g < kNumGroups; ++g) {
    LaplaceParams p =
        params(hv, temporal_prior ? &tv : nullptr, Var(partial), Var(mask));
    const Tensor& mu = p.mu.value();
    const Tensor& b = p.b.value();
    for (int cc = 0; cc < c; ++cc)
      for (int y = kGroupPhaseY[g]; y < h; y += 2)
        for (int x = kGroupPhaseX[g]; x < w; x += 2) {
          const float fs = symbols.at(cc, y, x);
          check_arg(std::isfinite(fs), "encode_latent: non-finite symbol");
          const int32_t s = static_cast<int32_t>(fs);
          const FreqTable table = laplace_freq_table(mu.at(cc, y, x),
                                                     b.at(cc, y, x));
          stats.underflow_flagged += table.floored > 0 ? 1 : 0;
          if (s >= -kSymbolMax && s <= kSymbolMax) {
            const int idx = s + kSymbolMax;
            enc->encode(table.cum[idx], table.freq(idx), kProbTotal);
            stats.estimated_bits += table.bits(idx);
          } else {
            enc->encode(table.cum[kEscapeIndex], table.freq(kEscapeIndex),
                        kProbTotal);
            code_raw_value(enc, s);
            stats.estimated_bits += table.bits(kEscapeIndex) + 8.0 * 5;
            ++stats.escape_count;
          }
          partial.at(cc, y, x) = fs * q_dec[static_cast<size_t>(cc)];
          mask.at(0, y, x) = 1.0f;
        }
  }
  return stats;
}

Tensor ConditionalEntropy::decode_latent(const std::vector<int>& shape,
                                         const Tensor& q_dec,
                                         const Tensor& hyper_feat,
                                         const Tensor* temporal_prior,
                                         RangeDecoder* dec,
                                         ChunkStats* stats) const {
  NoGradGuard ng;
  check_arg(shape.size() == 3, "decode_latent: need [C,h,w]");
  const int c = shape[0], h = shape[1], w = shape[2];
  Tensor symbols({c, h, w});
  Tensor partial = Tensor::zeros({c, h, w});
  Tensor mask = Tensor::zeros({1, h, w});
  Var hv(hyper_feat);
  Var tv;
  if (temporal_prior) tv = Var(*temporal_prior);
  for (int g = 0; g < kNumGroups; ++g) {
    LaplaceParams p =
        params(hv, temporal_prior ? &tv : nullptr, Var(partial), Var(mask));
    const Tensor& mu = p.mu.value();
    const Tensor& b = p.b.value();
    for (int cc = 0; cc < c; ++cc)
      for (int y = kGroupPhaseY[g]; y < h; y += 2)
        for (int x = kGroupPhaseX[g]; x < w; x += 2) {
          const FreqTable table = laplace_freq_table(mu.at(cc, y, x),
                                                     b.at(cc, y, x));
          const int idx = table.find(dec->decode_target(kProbTotal));
          dec->decode_update(table.cum[idx], table.freq(idx), kProbTotal);
          int32_t s;
          if (idx == kEscapeIndex) {
            s = decode_raw_value(dec);
            if (stats) ++stats->escape_count;
          } else {
            s = idx - kSymbolMax;
          }
          symbols.at(cc, y, x) = static_cast<float>(s);
          partial.at(cc, y, x) =
              static_cast<float>(s) * q_dec[static_cast<size_t>(cc)];
          mask.at(0, y, x) = 1.0f;
        }
  }
  return symbols;
}

}  // namespace bvc
