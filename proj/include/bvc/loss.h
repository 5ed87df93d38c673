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

#ifndef BVC_LOSS_H_
#define BVC_LOSS_H_

#include <string>

#include "bvc/nn.h"

namespace bvc {

enum class LossKind { kMeD, kMeRD, kRecD, kRecRD, kAll };
enum class TrainTarget { kInter, kRecon, kAll };

LossKind parse_loss_kind(const std::string& name);
TrainTarget parse_train_target(const std::string& name);
const char* loss_kind_name(LossKind k);
const char* train_target_name(TrainTarget t);

// Per-frame rate-distortion objective. Every frame steps the optimizer on its
// own loss; there is no multi-frame averaging.
double compute_loss(LossKind kind, double d_m, double d_y, double r_m,
                    double r_y, double w_t, double lambda);

struct LossBreakdown {
  double d_m = 0.0;
  double d_y = 0.0;
  double r_m = 0.0;
  double r_y = 0.0;
  double w_t = 1.0;
  double lambda = 0.0;
  double total = 0.0;
};

// Training-only merge of the two motion-compensated predictions.
class MaskNet : public Module {
 public:
  MaskNet(Rng& rng, int ch = 16);
  Var mask(const Var& pred_f, const Var& pred_b) const;  // [1,H,W] in (0,1)

 private:
  BottleneckBlock b0_, b1_;
  Conv2d head_;
};

// x = m * pred_f + (1 - m) * pred_b
Var merge_with_mask(const Var& pred_f, const Var& pred_b, const Var& m);

Var mse(const Var& a, const Var& b);

}  // namespace bvc

#endif  // BVC_LOSS_H_
