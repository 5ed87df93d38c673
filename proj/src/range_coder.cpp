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

#include "bvc/range_coder.h"

#include <algorithm>
#include <cmath>

namespace bvc {

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t out = cache_;
    do {
      bytes_.push_back(static_cast<uint8_t>(out + carry));
      out = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
  check_arg(freq >= 1 && cum + freq <= total && total <= kProbTotal,
            "range encoder: bad frequency interval");
  range_ /= total;
  low_ += static_cast<uint64_t>(cum) * range_;
  range_ *= freq;
  while (range_ < kRangeTop) {
    shift_low();
    range_ <<= 8;
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(bytes_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size)
    : data_(data), size_(size) {
  read_byte();  // sentinel produced by the encoder's initial cache
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | read_byte();
}

uint8_t RangeDecoder::read_byte() {
  check_stream(pos_ < size_, "range decoder: chunk truncated");
  return data_[pos_++];
}

uint32_t RangeDecoder::decode_target(uint32_t total) {
  range_ /= total;
  uint32_t t = code_ / range_;
  return std::min(t, total - 1);
}

void RangeDecoder::decode_update(uint32_t cum, uint32_t freq, uint32_t total) {
  (void)total;  // already folded into range_ by decode_target
  code_ -= cum * range_;
  range_ *= freq;
  while (range_ < kRangeTop) {
    code_ = (code_ << 8) | read_byte();
    range_ <<= 8;
  }
}

int FreqTable::find(uint32_t target) const {
  int lo = 0, hi = size() - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (cum[mid] <= target)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

double FreqTable::bits(int i) const {
  return -std::log2(static_cast<double>(freq(i)) / kProbTotal);
}

FreqTable quantize_pmf(const std::vector<double>& pmf) {
  const int n = static_cast<int>(pmf.size());
  check_arg(n >= 1 && n <= static_cast<int>(kProbTotal / 2), "pmf size");
  FreqTable t;
  std::vector<int64_t> f(n);
  int64_t sum = 0;
  for (int i = 0; i < n; ++i) {
    double p = pmf[i];
    if (!(p >= 0.0)) p = 0.0;
    int64_t fi = static_cast<int64_t>(p * kProbTotal);
    if (fi < 1) {
      fi = 1;
      if (p * kProbTotal < 1.0) ++t.floored;
    }
    if (fi > kProbTotal) fi = kProbTotal;
    f[i] = fi;
    sum += fi;
  }
  int64_t diff = static_cast<int64_t>(kProbTotal) - sum;
  while (diff != 0) {
    // settle against the largest bin; first index wins ties
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (f[i] > f[best]) best = i;
    if (diff > 0) {
      f[best] += diff;
      diff = 0;
    } else {
      const int64_t take = std::min(-diff, f[best] - 1);
      f[best] -= take;
      diff += take;
      check_arg(take > 0, "pmf quantization cannot settle");
    }
  }
  t.cum.resize(static_cast<size_t>(n) + 1);
  t.cum[0] = 0;
  for (int i = 0; i < n; ++i)
    t.cum[static_cast<size_t>(i) + 1] =
        t.cum[static_cast<size_t>(i)] + static_cast<uint32_t>(f[i]);
  return t;
}

}  // namespace bvc
