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

#ifndef BVC_GOP_H_
#define BVC_GOP_H_

#include <array>
#include <string>
#include <vector>

#include "bvc/common.h"

namespace bvc {

enum class FrameType { kIntra, kBi };

// Which reference-type combination a B-frame sees; selects the MFA/PFA
// adaptor downstream. Order: forward ref type then backward ref type.
enum class RefCase { kII, kIB, kBI, kBB };

struct FramePlan {
  int display_index = 0;
  int coding_order = 0;
  int layer = 0;  // 0 = intra, 1..5 = bisection depth
  FrameType frame_type = FrameType::kIntra;
  int fwd_ref = -1;  // display index, -1 = none
  int bwd_ref = -1;
  double quality_coeff = 1.0;
};

struct GopConfig {
  int intra_period = 32;
  int gop_size = 32;
  // w_t for layers 1..5.
  std::array<double, 5> quality_coeffs = {1.4, 1.4, 0.7, 0.5, 0.5};
  double i_frame_coeff = 1.0;

  void validate() const;
};

// Hierarchical plan: I-frames at multiples of intra_period (final frame
// promoted to I when it would lack a backward reference), interiors filled by
// recursive midpoint bisection, coding order I-first then per-GOP layers with
// lower display index first. Output is sorted by coding order.
std::vector<FramePlan> plan_sequence(int num_frames, const GopConfig& config);

double quality_coeff_for(const FramePlan& plan, const GopConfig& config);

RefCase reference_case(const FramePlan& plan,
                       const std::vector<FramePlan>& plans);

const char* ref_case_name(RefCase c);

// Line-oriented dump: `coding_order display_index layer type fwd bwd w`.
std::string dump_plan(const std::vector<FramePlan>& plans);

}  // namespace bvc

#endif  // BVC_GOP_H_
