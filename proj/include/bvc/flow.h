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

#ifndef BVC_FLOW_H_
#define BVC_FLOW_H_

#include <memory>
#include <utility>
#include <vector>

#include "bvc/nn.h"

namespace bvc {

// Pixel-displacement field [2,H,W], x component then y component. Maps
// coordinates of the source frame into the target frame.
struct Flow {
  Var v;
  int source = -1;  // display indices, informational
  int target = -1;

  const Tensor& values() const { return v.value(); }
};

// Backward bilinear warping with border replication, applied per channel.
Var warp(const Var& feature, const Var& flow);

// Bilinear spatial downsample by 2 with displacement values halved.
Flow downsample_flow(const Flow& f);

// Motion vector predictions scaled by temporal distance: the symmetric case
// (d_f == d_b) reduces to half of the cross-reference motion.
std::pair<Flow, Flow> make_predictions(const Flow& v_bf, const Flow& v_fb,
                                       int d_f, int d_b);

Flow make_mvd(const Flow& v, const Flow& pred);              // r = v - pred
Flow reconstruct_flow(const Flow& rhat, const Flow& pred);   // vhat = rhat + pred

struct MotionBundle {
  Flow v_tf, v_tb;
  Flow pred_tf, pred_tb;
  Flow r_tf, r_tb;
  Flow rhat_tf, rhat_tb;
  Flow vhat_tf, vhat_tb;
};

// Asserts r = v - pred and vhat = rhat + pred to machine precision.
void verify_bundle(const MotionBundle& b);

// Coarse-to-fine learned estimator; resolution must be divisible by
// 2^(levels-1).
class FlowEstimator : public Module {
 public:
  FlowEstimator(Rng& rng, int levels = 3, int channels = 16);
  ~FlowEstimator() override;

  // Flow mapping coordinates of frame_a into frame_b; frames share shape,
  // values in [0,1].
  Var estimate(const Var& frame_a, const Var& frame_b) const;

 private:
  struct LevelNet;
  std::vector<std::unique_ptr<LevelNet>> levels_;
};

}  // namespace bvc

#endif  // BVC_FLOW_H_
