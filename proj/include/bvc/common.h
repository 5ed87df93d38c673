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

#ifndef BVC_COMMON_H_
#define BVC_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bvc {

// Decoder-side failure: the byte stream does not parse or fails its checksum.
class CorruptBitstreamError : public std::runtime_error {
 public:
  explicit CorruptBitstreamError(const std::string& what)
      : std::runtime_error(what) {}
};

// Training/evaluation input problems (missing clips, short clips, bad files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

inline void check_arg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void check_stream(bool ok, const std::string& msg) {
  if (!ok) throw CorruptBitstreamError(msg);
}

// Single RNG used for init, data synthesis and quantization noise so that a
// fixed seed reproduces a training run exactly.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0x5eed) : gen_(seed) {}

  float uniform(float lo, float hi) {
    return std::uniform_real_distribution<float>(lo, hi)(gen_);
  }
  float normal(float mean, float stddev) {
    return std::normal_distribution<float>(mean, stddev)(gen_);
  }
  int uniform_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bvc

#endif  // BVC_COMMON_H_
