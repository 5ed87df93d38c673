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

#include "bvc/model.h"

#include <cstring>
#include <fstream>
#include <map>

namespace bvc {

ModelConfig ModelConfig::small() {
  ModelConfig c;
  c.flow_levels = 3;
  c.flow_ch = 8;
  c.motion_trunk = 16;
  c.motion_latent = 16;
  c.motion_ctx = 12;
  c.ref_ch = 12;
  c.ctx_ch = 12;
  c.frame_trunk = 20;
  c.frame_latent = 24;
  c.iframe_trunk = 20;
  c.iframe_latent = 20;
  c.z_ch = 12;
  c.mask_ch = 8;
  return c;
}

CodecModel::CodecModel(const ModelConfig& cfg)
    : cfg_(cfg),
      init_rng_(cfg.seed),
      flow_est(init_rng_, cfg.flow_levels, cfg.flow_ch),
      motion(init_rng_, cfg.motion_trunk, cfg.motion_latent, cfg.motion_ctx,
             cfg.z_ch),
      miner(init_rng_, cfg.ref_ch, cfg.ctx_ch),
      frame_codec(init_rng_, cfg.frame_trunk, cfg.frame_latent, cfg.ctx_ch,
                  cfg.ref_ch, cfg.z_ch),
      iframe(init_rng_, cfg.iframe_trunk, cfg.iframe_latent, cfg.z_ch),
      mask_net(init_rng_, cfg.mask_ch) {}

namespace {

void append_prefixed(Module& m, const std::string& prefix,
                     std::vector<Param*>* out) {
  m.collect_parameters(prefix, out);
}

}  // namespace

std::vector<Param*> CodecModel::inter_params() {
  std::vector<Param*> out;
  append_prefixed(flow_est, "flow.", &out);
  append_prefixed(motion, "motion.", &out);
  append_prefixed(mask_net, "mask.", &out);
  return out;
}

std::vector<Param*> CodecModel::recon_params() {
  std::vector<Param*> out;
  append_prefixed(miner, "miner.", &out);
  append_prefixed(frame_codec, "frame.", &out);
  return out;
}

std::vector<Param*> CodecModel::all_params() {
  std::vector<Param*> out = inter_params();
  std::vector<Param*> r = recon_params();
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<Param*> CodecModel::iframe_params() {
  std::vector<Param*> out;
  append_prefixed(iframe, "iframe.", &out);
  return out;
}

std::vector<Param*> CodecModel::group(TrainTarget t) {
  switch (t) {
    case TrainTarget::kInter: return inter_params();
    case TrainTarget::kRecon: return recon_params();
    case TrainTarget::kAll: return all_params();
  }
  throw std::invalid_argument("unknown train target");
}

std::vector<Param*> CodecModel::everything() {
  std::vector<Param*> out = all_params();
  std::vector<Param*> i = iframe_params();
  out.insert(out.end(), i.begin(), i.end());
  return out;
}

namespace {

template <typename T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("model file truncated");
  return v;
}

}  // namespace

void CodecModel::save(const std::string& path) const {
  auto* self = const_cast<CodecModel*>(this);
  std::vector<Param*> params = self->everything();
  std::ofstream os(path, std::ios::binary);
  check_arg(os.good(), "cannot open model file for writing: " + path);
  os.write("BVCM", 4);
  write_pod<uint32_t>(os, 1);  // version
  write_pod<uint32_t>(os, static_cast<uint32_t>(params.size()));
  for (const Param* p : params) {
    write_pod<uint16_t>(os, static_cast<uint16_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const Tensor& t = p->var.value();
    write_pod<uint8_t>(os, static_cast<uint8_t>(t.ndim()));
    for (int d = 0; d < t.ndim(); ++d)
      write_pod<uint32_t>(os, static_cast<uint32_t>(t.dim(d)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  check_arg(os.good(), "failed writing model file: " + path);
}

void CodecModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) throw DataError("cannot open model file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BVCM", 4) != 0)
    throw DataError("not a model file: " + path);
  if (read_pod<uint32_t>(is) != 1) throw DataError("unsupported model version");
  const uint32_t count = read_pod<uint32_t>(is);

  std::map<std::string, Param*> by_name;
  for (Param* p : everything()) by_name[p->name] = p;
  if (count != by_name.size())
    throw DataError("model file parameter count does not match this config");

  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t len = read_pod<uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const uint8_t ndim = read_pod<uint8_t>(is);
    std::vector<int> shape;
    for (int d = 0; d < ndim; ++d)
      shape.push_back(static_cast<int>(read_pod<uint32_t>(is)));
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("unknown parameter: " + name);
    Tensor& dst = it->second->var.mutable_value();
    if (dst.shape() != shape)
      throw DataError("parameter shape mismatch: " + name);
    is.read(reinterpret_cast<char*>(dst.data()),
            static_cast<std::streamsize>(dst.numel() * sizeof(float)));
    if (!is) throw DataError("model file truncated in " + name);
  }
}

}  // namespace bvc
