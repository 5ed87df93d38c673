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

#include "bvc/loss.h"

namespace bvc {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "meD") return LossKind::kMeD;
  if (name == "meRD") return LossKind::kMeRD;
  if (name == "recD") return LossKind::kRecD;
  if (name == "recRD") return LossKind::kRecRD;
  if (name == "all") return LossKind::kAll;
  throw std::invalid_argument("unknown loss kind: " + name);
}

TrainTarget parse_train_target(const std::string& name) {
  if (name == "Inter") return TrainTarget::kInter;
  if (name == "Recon") return TrainTarget::kRecon;
  if (name == "All") return TrainTarget::kAll;
  throw std::invalid_argument("unknown train target: " + name);
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kMeD: return "meD";
    case LossKind::kMeRD: return "meRD";
    case LossKind::kRecD: return "recD";
    case LossKind::kRecRD: return "recRD";
    case LossKind::kAll: return "all";
  }
  return "?";
}

const char* train_target_name(TrainTarget t) {
  switch (t) {
    case TrainTarget::kInter: return "Inter";
    case TrainTarget::kRecon: return "Recon";
    case TrainTarget::kAll: return "All";
  }
  return "?";
}

double compute_loss(LossKind kind, double d_m, double d_y, double r_m,
                    double r_y, double w_t, double lambda) {
  check_arg(d_m >= 0.0 && d_y >= 0.0 && r_m >= 0.0 && r_y >= 0.0,
            "compute_loss: distortions and rates must be nonnegative");
  check_arg(w_t > 0.0 && lambda > 0.0,
            "compute_loss: w_t and lambda must be positive");
  switch (kind) {
    case LossKind::kMeD: return w_t * lambda * d_m;
    case LossKind::kMeRD: return w_t * lambda * d_m + r_m;
    case LossKind::kRecD: return w_t * lambda * d_y;
    case LossKind::kRecRD: return w_t * lambda * d_y + r_y;
    case LossKind::kAll: return w_t * lambda * d_y + r_m + r_y;
  }
  throw std::invalid_argument("unknown loss kind");
}

MaskNet::MaskNet(Rng& rng, int ch)
    : b0_(rng, 6, ch), b1_(rng, ch, ch), head_(rng, ch, 1, 3, 1, 1) {
  register_child("b0", &b0_);
  register_child("b1", &b1_);
  register_child("head", &head_);
}

Var MaskNet::mask(const Var& pred_f, const Var& pred_b) const {
  check_arg(pred_f.value().same_shape(pred_b.value()),
            "merge_prediction: resolution mismatch");
  Var h = b1_.forward(b0_.forward(concat_ch({pred_f, pred_b})));
  return sigmoid(head_.forward(h));
}

Var merge_with_mask(const Var& pred_f, const Var& pred_b, const Var& m) {
  Var mf = mul_ch_bcast(pred_f, m);
  Var mb = mul_ch_bcast(pred_b, add_scalar(mul_scalar(m, -1.0f), 1.0f));
  return add(mf, mb);
}

Var mse(const Var& a, const Var& b) { return mean_all(square(sub(a, b))); }

}  // namespace bvc
