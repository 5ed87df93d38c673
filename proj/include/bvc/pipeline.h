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
// Sequence orchestration. The encoder reconstructs every frame through the
// same code path the decoder runs, from the same quantized symbols, so both
// sides hold bitwise-identical reference state.

#ifndef BVC_PIPELINE_H_
#define BVC_PIPELINE_H_

#include <map>
#include <optional>
#include <vector>

#include "bvc/bitstream.h"
#include "bvc/model.h"

namespace bvc {

struct FrameStats {
  int display_index = 0;
  int coding_order = 0;
  int layer = 0;
  FrameType frame_type = FrameType::kIntra;
  double motion_bits = 0.0;      // payload bits of the two motion chunks
  double contextual_bits = 0.0;  // payload bits of the contextual (or intra) chunks
  double motion_est_bits = 0.0;
  double contextual_est_bits = 0.0;
  double record_bits = 0.0;      // full record including framing and checksum
  double psnr = 0.0;             // encoder side, against the source frame
  int escapes = 0;
  int underflow = 0;

  double total_bits() const { return motion_bits + contextual_bits; }
};

struct SequenceStats {
  std::vector<FrameStats> frames;  // display order
  size_t total_bytes = 0;
  size_t header_bytes = kHeaderBytes;
  int width = 0;
  int height = 0;

  double bpp() const;
  double mean_psnr() const;
};

struct CodingOptions {
  double rate_idx = 3.0;
  GopConfig gop;
  bool zero_motion_contexts = false;  // MFA ablation: dispatch kept, zeros fed
};

// Housekeeping for decoded frames that successors still reference.
struct ReferenceEntry {
  int display_index = -1;
  FrameType frame_type = FrameType::kIntra;
  Tensor x_hat;  // padded dimensions
  Tensor f_hat;
  ReferenceFeature::Origin f_origin = ReferenceFeature::Origin::kDecodedFeature;
  std::optional<MotionDiffContext> motion_ctx;
  std::optional<Tensor> y_deq;
  int pending_uses = 0;
};

class RefStore {
 public:
  void put(ReferenceEntry e);
  const ReferenceEntry& get(int display, int accessor,
                            std::vector<std::pair<int, int>>* log);
  void release(int display);
  size_t size() const { return entries_.size(); }
  size_t peak_size() const { return peak_; }

 private:
  std::map<int, ReferenceEntry> entries_;
  size_t peak_ = 0;
};

class Pipeline {
 public:
  explicit Pipeline(CodecModel& model) : model_(model) {}

  // access_log records (coding frame, referenced frame) pairs in order.
  std::vector<uint8_t> encode_sequence(
      const std::vector<Tensor>& frames, const CodingOptions& opts,
      SequenceStats* stats = nullptr,
      std::vector<Tensor>* encoder_recons = nullptr,
      std::vector<std::pair<int, int>>* access_log = nullptr);

  std::vector<Tensor> decode_sequence(
      const std::vector<uint8_t>& bytes,
      std::vector<std::pair<int, int>>* access_log = nullptr);

  size_t last_peak_references() const { return last_peak_refs_; }

 private:
  CodecModel& model_;
  size_t last_peak_refs_ = 0;
};

// DAG-derived upper bound on simultaneously live references (oracle for the
// bounded-memory property).
size_t plan_peak_live_references(const std::vector<FramePlan>& plans);

}  // namespace bvc

#endif  // BVC_PIPELINE_H_
