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
// 32-bit renormalizing range coder with carry propagation via a byte cache,
// 16-bit probability precision. The normative description lives in
// docs/bitstream.md; this implementation is the reference.

#ifndef BVC_RANGE_CODER_H_
#define BVC_RANGE_CODER_H_

#include <cstdint>
#include <vector>

#include "bvc/common.h"

namespace bvc {

inline constexpr uint32_t kProbBits = 16;
inline constexpr uint32_t kProbTotal = 1u << kProbBits;
inline constexpr uint32_t kRangeTop = 1u << 24;

class RangeEncoder {
 public:
  // Encodes a symbol occupying [cum, cum+freq) of [0, total). freq >= 1.
  void encode(uint32_t cum, uint32_t freq, uint32_t total);
  // Flushes the final state; the encoder is spent afterwards.
  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;  // accounts for the leading sentinel byte
  std::vector<uint8_t> bytes_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  // Returns the cumulative-frequency target in [0,total) for the next symbol.
  uint32_t decode_target(uint32_t total);
  // Consumes the symbol previously located via decode_target.
  void decode_update(uint32_t cum, uint32_t freq, uint32_t total);

 private:
  uint8_t read_byte();

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

// Cumulative frequency table over n bins summing exactly to kProbTotal with
// every bin >= 1.
struct FreqTable {
  std::vector<uint32_t> cum;  // size n+1, cum[0]=0, cum[n]=kProbTotal
  int floored = 0;            // bins whose probability underflowed 2^-16

  int size() const { return static_cast<int>(cum.size()) - 1; }
  uint32_t freq(int i) const { return cum[i + 1] - cum[i]; }
  int find(uint32_t target) const;  // bin with cum[i] <= target < cum[i+1]
  double bits(int i) const;         // -log2(freq/total)
};

// Deterministic PMF quantization: floor to integers, floor bins at 1, then
// settle the residual against the largest bins (first index wins ties).
FreqTable quantize_pmf(const std::vector<double>& pmf);

}  // namespace bvc

#endif  // BVC_RANGE_CODER_H_
