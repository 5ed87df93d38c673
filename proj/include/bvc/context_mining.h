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
// Multi-scale temporal context mining: one direction per call, forward and
// backward contexts are never merged here.

#ifndef BVC_CONTEXT_MINING_H_
#define BVC_CONTEXT_MINING_H_

#include <memory>
#include <vector>

#include "bvc/flow.h"

namespace bvc {

enum class Direction { kForward, kBackward };

struct ContextSet {
  Var c0;  // [C_ctx, H, W]
  Var c1;  // [C_ctx, H/2, W/2]
  Var c2;  // [C_ctx, H/4, W/4]
  Direction direction = Direction::kForward;
};

struct ReferenceFeature {
  enum class Origin { kDecodedFeature, kLiftedIframe };
  Var values;  // [C_ref, H, W]
  Origin origin = Origin::kDecodedFeature;
};

class ContextMiner : public Module {
 public:
  ContextMiner(Rng& rng, int ref_ch, int ctx_ch);
  ~ContextMiner() override;

  // Single learned transform into the feature domain for reconstructed
  // I-frames; shared by both directions.
  ReferenceFeature lift_iframe(const Var& frame) const;

  // Quality adaptor for `layer`, feature extraction at three scales, flow
  // downsampling, per-scale warping, coarse-to-fine fusion.
  ContextSet mine(const ReferenceFeature& ref, const Flow& vhat, int layer,
                  Direction dir) const;

  int ref_channels() const { return ref_ch_; }
  int ctx_channels() const { return ctx_ch_; }

 private:
  int ref_ch_, ctx_ch_;
  Conv2d lift_;
  std::vector<std::unique_ptr<Conv2d>> adaptors_;  // 1x1, one per layer 1..5
  Conv2d fe0_, fe1_, fe2_;
  ResidualBlock fe0rb_, fe1rb_, fe2rb_;
  Conv2d fu2_, fu1_, fu0_;
  ResidualBlock fu2rb_, fu1rb_, fu0rb_;
  SubpixelUp up1_, up0_;
  ResidualBlock up1rb_, up0rb_;
};

}  // namespace bvc

#endif  // BVC_CONTEXT_MINING_H_
