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

#ifndef BVC_MODEL_H_
#define BVC_MODEL_H_

#include <string>

#include "bvc/context_mining.h"
#include "bvc/contextual_codec.h"
#include "bvc/flow.h"
#include "bvc/iframe_codec.h"
#include "bvc/loss.h"
#include "bvc/motion_codec.h"

namespace bvc {

struct ModelConfig {
  int flow_levels = 3;
  int flow_ch = 16;
  int motion_trunk = 64;
  int motion_latent = 64;  // C_m
  int motion_ctx = 64;     // C_mc
  int ref_ch = 48;         // C_ref
  int ctx_ch = 48;         // C_ctx
  int frame_trunk = 64;
  int frame_latent = 96;   // C_y
  int iframe_trunk = 64;
  int iframe_latent = 64;
  int z_ch = 32;           // hyper latent width, shared by all codecs
  int mask_ch = 16;
  uint64_t seed = 0x5eed;

  // Narrow configuration for desk-scale training runs and tests.
  static ModelConfig small();
};

// The full codec: every learnable component plus the parameter groups the
// step-by-step schedule freezes against.
class CodecModel {
 public:
  explicit CodecModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Inter: motion estimator, motion codec (with its entropy machinery and
  // quantization banks) and the training-only mask network.
  std::vector<Param*> inter_params();
  // Recon: context mining, contextual codec and the entropy for contextual
  // latents.
  std::vector<Param*> recon_params();
  // All: Inter plus Recon. References are detached during training, so the
  // I-frame codec is unreachable from a B-frame loss and trains separately.
  std::vector<Param*> all_params();
  std::vector<Param*> iframe_params();
  std::vector<Param*> group(TrainTarget t);
  std::vector<Param*> everything();

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  ModelConfig cfg_;
  Rng init_rng_;  // declared before the modules: construction consumes it

 public:
  FlowEstimator flow_est;
  MotionCodec motion;
  ContextMiner miner;
  ContextualCodec frame_codec;
  IframeCodec iframe;
  MaskNet mask_net;
};

}  // namespace bvc

#endif  // BVC_MODEL_H_
