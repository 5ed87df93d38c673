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
// Sequence container: a fixed header followed by self-delimiting frame
// records in coding order. Layout is normative; see docs/bitstream.md.

#ifndef BVC_BITSTREAM_H_
#define BVC_BITSTREAM_H_

#include <cstdint>
#include <vector>

#include "bvc/common.h"

namespace bvc {

inline constexpr char kContainerMagic[4] = {'D', 'C', 'V', 'B'};
inline constexpr uint8_t kContainerVersion = 1;

struct ContainerHeader {
  uint32_t width = 0;   // display dimensions (before padding)
  uint32_t height = 0;
  uint16_t intra_period = 32;
  uint16_t gop_size = 32;
  float rate_idx = 0.0f;  // fractional allowed
  uint32_t frame_count = 0;
  uint8_t pad_right = 0;
  uint8_t pad_bottom = 0;
};
inline constexpr size_t kHeaderBytes = 4 + 1 + 4 + 4 + 2 + 2 + 4 + 4 + 1 + 1;

void append_u8(std::vector<uint8_t>* out, uint8_t v);
void append_u16(std::vector<uint8_t>* out, uint16_t v);
void append_u32(std::vector<uint8_t>* out, uint32_t v);
void append_f32(std::vector<uint8_t>* out, float v);
void append_varint(std::vector<uint8_t>* out, uint64_t v);

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  float f32();
  uint64_t varint();
  const uint8_t* bytes(size_t n);  // validated view
  size_t remaining() const { return size_ - pos_; }
  size_t pos() const { return pos_; }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

uint32_t crc32(const uint8_t* data, size_t size);

void write_header(std::vector<uint8_t>* out, const ContainerHeader& h);
ContainerHeader read_header(ByteReader* r);

// One frame record: [varint payload_len][payload][crc32(payload)].
// The payload is a sequence of [varint chunk_len][chunk] entries.
void write_frame_record(std::vector<uint8_t>* out,
                        const std::vector<std::vector<uint8_t>>& chunks);
std::vector<std::vector<uint8_t>> read_frame_record(ByteReader* r,
                                                    int expected_chunks);

}  // namespace bvc

#endif  // BVC_BITSTREAM_H_
