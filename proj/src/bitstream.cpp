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

#include "bvc/bitstream.h"

#include <array>
#include <cstring>

namespace bvc {

void append_u8(std::vector<uint8_t>* out, uint8_t v) { out->push_back(v); }

void append_u16(std::vector<uint8_t>* out, uint16_t v) {
  out->push_back(static_cast<uint8_t>(v & 0xFF));
  out->push_back(static_cast<uint8_t>(v >> 8));
}

void append_u32(std::vector<uint8_t>* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_f32(std::vector<uint8_t>* out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32(out, bits);
}

void append_varint(std::vector<uint8_t>* out, uint64_t v) {
  while (v >= 0x80) {
    out->push_back(static_cast<uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out->push_back(static_cast<uint8_t>(v));
}

uint8_t ByteReader::u8() {
  check_stream(pos_ < size_, "container truncated");
  return data_[pos_++];
}

uint16_t ByteReader::u16() {
  const uint16_t lo = u8();
  return static_cast<uint16_t>(lo | (static_cast<uint16_t>(u8()) << 8));
}

uint32_t ByteReader::u32() {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
  return v;
}

float ByteReader::f32() {
  const uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

uint64_t ByteReader::varint() {
  uint64_t v = 0;
  int shift = 0;
  while (true) {
    const uint8_t b = u8();
    v |= static_cast<uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
    check_stream(shift < 63, "varint overlong");
  }
}

const uint8_t* ByteReader::bytes(size_t n) {
  check_stream(pos_ + n <= size_, "container truncated");
  const uint8_t* p = data_ + pos_;
  pos_ += n;
  return p;
}

uint32_t crc32(const uint8_t* data, size_t size) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < size; ++i)
    c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void write_header(std::vector<uint8_t>* out, const ContainerHeader& h) {
  out->insert(out->end(), kContainerMagic, kContainerMagic + 4);
  append_u8(out, kContainerVersion);
  append_u32(out, h.width);
  append_u32(out, h.height);
  append_u16(out, h.intra_period);
  append_u16(out, h.gop_size);
  append_f32(out, h.rate_idx);
  append_u32(out, h.frame_count);
  append_u8(out, h.pad_right);
  append_u8(out, h.pad_bottom);
}

ContainerHeader read_header(ByteReader* r) {
  const uint8_t* magic = r->bytes(4);
  check_stream(std::memcmp(magic, kContainerMagic, 4) == 0,
               "bad container magic");
  check_stream(r->u8() == kContainerVersion, "unsupported container version");
  ContainerHeader h;
  h.width = r->u32();
  h.height = r->u32();
  h.intra_period = r->u16();
  h.gop_size = r->u16();
  h.rate_idx = r->f32();
  h.frame_count = r->u32();
  h.pad_right = r->u8();
  h.pad_bottom = r->u8();
  check_stream(h.width > 0 && h.height > 0 && h.width < (1u << 16) &&
                   h.height < (1u << 16),
               "implausible frame dimensions");
  check_stream(h.frame_count > 0 && h.frame_count < (1u << 24),
               "implausible frame count");
  check_stream(h.pad_right < 16 && h.pad_bottom < 16, "implausible padding");
  check_stream(std::isfinite(h.rate_idx) && h.rate_idx >= 0.0f &&
                   h.rate_idx <= 3.0f,
               "rate index out of range");
  return h;
}

void write_frame_record(std::vector<uint8_t>* out,
                        const std::vector<std::vector<uint8_t>>& chunks) {
  std::vector<uint8_t> payload;
  for (const auto& c : chunks) {
    append_varint(&payload, c.size());
    payload.insert(payload.end(), c.begin(), c.end());
  }
  append_varint(out, payload.size());
  out->insert(out->end(), payload.begin(), payload.end());
  append_u32(out, crc32(payload.data(), payload.size()));
}

std::vector<std::vector<uint8_t>> read_frame_record(ByteReader* r,
                                                    int expected_chunks) {
  const uint64_t payload_len = r->varint();
  check_stream(payload_len <= r->remaining(), "frame record truncated");
  const uint8_t* payload = r->bytes(payload_len);
  const uint32_t want_crc = r->u32();
  check_stream(crc32(payload, payload_len) == want_crc,
               "frame record checksum mismatch");
  ByteReader pr(payload, payload_len);
  std::vector<std::vector<uint8_t>> chunks;
  for (int i = 0; i < expected_chunks; ++i) {
    const uint64_t len = pr.varint();
    check_stream(len <= pr.remaining(), "chunk truncated");
    const uint8_t* p = pr.bytes(len);
    chunks.emplace_back(p, p + len);
  }
  check_stream(pr.remaining() == 0, "trailing bytes in frame record");
  return chunks;
}

}  // namespace bvc
