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

#include "bvc/gop.h"

#include <algorithm>
#include <sstream>

namespace bvc {

void GopConfig::validate() const {
  check_arg(intra_period >= 1 && intra_period <= 32,
            "intra_period must be in [1,32]");
  check_arg(gop_size >= 1 && gop_size <= intra_period,
            "gop_size must be in [1,intra_period]");
  check_arg(intra_period % gop_size == 0,
            "intra_period must be divisible by gop_size");
  check_arg(i_frame_coeff > 0.0, "i_frame_coeff must be positive");
  for (double w : quality_coeffs)
    check_arg(w > 0.0, "quality coefficients must be positive");
}

namespace {

void bisect(int lo, int hi, int depth, std::vector<FramePlan>* out) {
  if (hi - lo <= 1) return;
  const int mid = (lo + hi) / 2;  // floor midpoint tie-break
  FramePlan p;
  p.display_index = mid;
  p.layer = depth;
  p.frame_type = FrameType::kBi;
  p.fwd_ref = lo;
  p.bwd_ref = hi;
  out->push_back(p);
  bisect(lo, mid, depth + 1, out);
  bisect(mid, hi, depth + 1, out);
}

}  // namespace

std::vector<FramePlan> plan_sequence(int num_frames, const GopConfig& config) {
  check_arg(num_frames >= 1, "num_frames must be >= 1");
  config.validate();

  // I-frame positions: multiples of the intra period plus, when the sequence
  // does not end on one, the final frame (it has no backward reference).
  std::vector<int> intras;
  for (int i = 0; i < num_frames; i += config.intra_period) intras.push_back(i);
  if (intras.back() != num_frames - 1) intras.push_back(num_frames - 1);

  std::vector<FramePlan> plans;
  plans.reserve(static_cast<size_t>(num_frames));

  auto push_intra = [&](int display) {
    FramePlan p;
    p.display_index = display;
    p.layer = 0;
    p.frame_type = FrameType::kIntra;
    p.coding_order = static_cast<int>(plans.size());
    p.quality_coeff = config.i_frame_coeff;
    plans.push_back(p);
  };

  push_intra(intras[0]);
  for (size_t g = 1; g < intras.size(); ++g) {
    push_intra(intras[g]);
    std::vector<FramePlan> interior;
    bisect(intras[g - 1], intras[g], 1, &interior);
    std::stable_sort(interior.begin(), interior.end(),
                     [](const FramePlan& a, const FramePlan& b) {
                       if (a.layer != b.layer) return a.layer < b.layer;
                       return a.display_index < b.display_index;
                     });
    for (FramePlan& p : interior) {
      p.coding_order = static_cast<int>(plans.size());
      p.quality_coeff = quality_coeff_for(p, config);
      plans.push_back(p);
    }
  }
  return plans;
}

double quality_coeff_for(const FramePlan& plan, const GopConfig& config) {
  check_arg(plan.layer >= 0 && plan.layer <= 5, "layer out of range");
  if (plan.layer == 0) return config.i_frame_coeff;
  return config.quality_coeffs[static_cast<size_t>(plan.layer - 1)];
}

RefCase reference_case(const FramePlan& plan,
                       const std::vector<FramePlan>& plans) {
  check_arg(plan.frame_type == FrameType::kBi,
            "reference_case is defined for B-frames only");
  auto type_of = [&](int display) {
    for (const FramePlan& p : plans)
      if (p.display_index == display) return p.frame_type;
    throw std::invalid_argument("reference display index not in plan");
  };
  const bool fwd_i = type_of(plan.fwd_ref) == FrameType::kIntra;
  const bool bwd_i = type_of(plan.bwd_ref) == FrameType::kIntra;
  if (fwd_i && bwd_i) return RefCase::kII;
  if (fwd_i) return RefCase::kIB;
  if (bwd_i) return RefCase::kBI;
  return RefCase::kBB;
}

const char* ref_case_name(RefCase c) {
  switch (c) {
    case RefCase::kII: return "II";
    case RefCase::kIB: return "IB";
    case RefCase::kBI: return "BI";
    case RefCase::kBB: return "BB";
  }
  return "??";
}

std::string dump_plan(const std::vector<FramePlan>& plans) {
  std::ostringstream os;
  for (const FramePlan& p : plans) {
    os << p.coding_order << ' ' << p.display_index << ' ' << p.layer << ' '
       << (p.frame_type == FrameType::kIntra ? 'I' : 'B') << ' ';
    if (p.fwd_ref < 0)
      os << '-';
    else
      os << p.fwd_ref;
    os << ' ';
    if (p.bwd_ref < 0)
      os << '-';
    else
      os << p.bwd_ref;
    os << ' ' << p.quality_coeff << '\n';
  }
  return os.str();
}

}  // namespace bvc
