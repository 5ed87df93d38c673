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
// Probability modeling and symbol coding: factorized hyper prior, Laplace
// conditional coding with a 4-phase quadtree spatial context, and the
// bi-directional temporal prior with per-case prior feature adaptors.

#ifndef BVC_ENTROPY_H_
#define BVC_ENTROPY_H_

#include <array>
#include <memory>
#include <vector>

#include "bvc/gop.h"
#include "bvc/nn.h"
#include "bvc/range_coder.h"

namespace bvc {

inline constexpr float kLaplaceScaleFloor = 1e-2f;
inline constexpr int kSymbolMax = 255;          // support [-255,255]
inline constexpr int kEscapeIndex = 2 * kSymbolMax + 1;
inline constexpr int kTableSize = 2 * kSymbolMax + 2;  // symbols + escape

struct LaplaceParams {
  Var mu;
  Var b;  // >= kLaplaceScaleFloor
};

struct ChunkStats {
  double estimated_bits = 0.0;  // cross-entropy of the quantized coding tables
  size_t actual_bytes = 0;
  int escape_count = 0;
  int underflow_flagged = 0;

  void merge(const ChunkStats& o) {
    estimated_bits += o.estimated_bits;
    actual_bytes += o.actual_bytes;
    escape_count += o.escape_count;
    underflow_flagged += o.underflow_flagged;
  }
};

// Exact bin probability P(round = delta + mu) under Laplace(mu, b), delta in
// symbol units. Double precision; identical on encoder and decoder.
double laplace_bin_prob(double delta, double b);

// Quantized coding table for Laplace(mu, b) over [-255,255] plus escape.
FreqTable laplace_freq_table(double mu, double b);

// Escape payload: zigzag varint, bytes coded flat.
void code_raw_value(RangeEncoder* enc, int32_t v);
int32_t decode_raw_value(RangeDecoder* dec);

// The 2x2 phase decomposition and its fixed decode order.
inline constexpr int kNumGroups = 4;
inline constexpr int kGroupPhaseY[kNumGroups] = {0, 1, 0, 1};
inline constexpr int kGroupPhaseX[kNumGroups] = {0, 1, 1, 0};
Tensor group_mask(int group, int h, int w);  // [1,h,w] of 0/1

// Per-channel learned cumulative model (monotone small MLP per channel).
class FactorizedModel : public Module {
 public:
  FactorizedModel(Rng& rng, int channels);

  Var cdf(const Var& x) const;          // [C,N] -> [C,N]
  Var bits(const Var& x) const;         // -log2(cdf(x+.5)-cdf(x-.5))
  double cdf_value(int channel, double x) const;
  FreqTable freq_table(int channel) const;
  int channels() const { return channels_; }

 private:
  int channels_;
  Param* w1_;
  Param* b1_;
  Param* a1_;
  Param* w2_;
  Param* b2_;
  Param* a2_;
  Param* w3_;
  Param* b3_;
};

class HyperEncoder : public Module {
 public:
  HyperEncoder(Rng& rng, int latent_ch, int z_ch);
  Var forward(const Var& y) const;  // spatial /4

 private:
  Conv2d c0_, c1_, c2_;
};

class HyperDecoder : public Module {
 public:
  HyperDecoder(Rng& rng, int z_ch, int hyper_ch);
  Var forward(const Var& z, int target_h, int target_w) const;  // spatial x4

 private:
  SubpixelUp up0_, up1_;
  Conv2d c2_;
};

// Coding of a quantized hyper latent under the factorized model.
ChunkStats encode_hyper(const Tensor& z_sym, const FactorizedModel& fm,
                        RangeEncoder* enc);
Tensor decode_hyper(const std::vector<int>& shape, const FactorizedModel& fm,
                    RangeDecoder* dec, ChunkStats* stats);
// Differentiable hyper rate (training).
Var hyper_bits(const Var& z_noisy, const FactorizedModel& fm);

// Fuses the quarter-resolution contexts and the reference latents into a
// temporal prior at latent resolution. One prior feature adaptor per
// reference case; exactly one is exercised per call.
class TemporalPriorNet : public Module {
 public:
  TemporalPriorNet(Rng& rng, int ctx_ch, int latent_ch);

  // Latents must be present iff the matching reference is a B-frame.
  Var fuse(const Var& cf2, const Var& cb2, const Var* y_f, const Var* y_b,
           RefCase c) const;

 private:
  Conv2d down0_, down1_;
  BottleneckBlock pfa0_, pfa1_, pfa2_, pfa3_;
  BottleneckBlock refine0_, refine1_;
};

// Laplace parameter head: hyper feature + optional temporal prior + quadtree
// spatial context of already-decoded groups.
class ConditionalEntropy : public Module {
 public:
  ConditionalEntropy(Rng& rng, int latent_ch, int hyper_ch,
                     bool with_temporal);

  // Full-grid params given the conditioning state. partial_deq holds the
  // dequantized symbols of already-processed groups (zeros elsewhere); mask
  // marks those positions.
  LaplaceParams params(const Var& hyper_feat, const Var* temporal_prior,
                       const Var& partial_deq, const Var& mask) const;

  // Differentiable training rate. y_cont is the pre-round symbol-domain
  // tensor; symbols_ste its straight-through rounding; q_dec dequantizes the
  // conditioning path.
  Var train_bits(const Var& y_cont, const Var& symbols_ste, const Var& q_dec,
                 const Var& hyper_feat, const Var* temporal_prior,
                 Rng& rng) const;

  ChunkStats encode_latent(const Tensor& symbols, const Tensor& q_dec,
                           const Tensor& hyper_feat,
                           const Tensor* temporal_prior,
                           RangeEncoder* enc) const;
  Tensor decode_latent(const std::vector<int>& shape, const Tensor& q_dec,
                       const Tensor& hyper_feat, const Tensor* temporal_prior,
                       RangeDecoder* dec, ChunkStats* stats) const;

 private:
  bool with_temporal_;
  Conv2d sctx_;
  BottleneckBlock fuse_;
  Conv2d head_;
};

}  // namespace bvc

#endif  // BVC_ENTROPY_H_
