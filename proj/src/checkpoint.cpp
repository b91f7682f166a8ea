/* Copyright 2026 The rgpnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "rgp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "rgp/common.hpp"

namespace rgp {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'P', 'N'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    RGP_CHECK_IO(out_.good(), "cannot open checkpoint '", path, "' for writing");
    path_ = path;
  }
  void bytes(const void* p, size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    RGP_CHECK_IO(out_.good(), "failed writing checkpoint '", path_, "'");
  }
  void u32(uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    u32(static_cast<uint32_t>(v));
    u32(static_cast<uint32_t>(v >> 32));
  }
  void f32_array(const float* p, size_t n) {
    // fp32 values are stored as little-endian bit patterns.
    for (size_t i = 0; i < n; ++i) {
      uint32_t bits;
      std::memcpy(&bits, p + i, 4);
      u32(bits);
    }
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    RGP_CHECK_IO(in.good(), "cannot open checkpoint '", path, "'");
    data_.assign((std::istreambuf_iterator<char>(in)),
                 std::istreambuf_iterator<char>());
  }
  void bytes(void* p, size_t n) {
    RGP_CHECK_IO(pos_ + n <= data_.size(), "checkpoint '", path_,
                 "' is truncated (needed ", n, " bytes at offset ", pos_, ")");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    const uint64_t lo = u32();
    const uint64_t hi = u32();
    return lo | (hi << 32);
  }
  std::string str(size_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<char> data_;
  size_t pos_ = 0;
};

void write_table(Writer& w, const std::vector<std::pair<std::string, Tensor>>& table) {
  w.u32(static_cast<uint32_t>(table.size()));
  for (const auto& [name, tensor] : table) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<uint32_t>(tensor.ndim()));
    for (int i = 0; i < tensor.ndim(); ++i)
      w.u32(static_cast<uint32_t>(tensor.dim(i)));
    w.f32_array(tensor.data(), static_cast<size_t>(tensor.numel()));
  }
}

std::vector<std::pair<std::string, Tensor>> read_table(Reader& r) {
  std::vector<std::pair<std::string, Tensor>> table;
  const uint32_t count = r.u32();
  table.reserve(count);
  for (uint32_t t = 0; t < count; ++t) {
    const uint32_t name_len = r.u32();
    RGP_CHECK_IO(name_len < 4096, "checkpoint '", r.path(),
                 "': implausible tensor name length ", name_len);
    std::string name = r.str(name_len);
    const uint32_t rank = r.u32();
    RGP_CHECK_IO(rank >= 1 && rank <= 8, "checkpoint '", r.path(),
                 "': tensor '", name, "' has implausible rank ", rank);
    std::vector<int> shape(rank);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(r.u32());
      RGP_CHECK_IO(shape[i] >= 1, "checkpoint '", r.path(), "': tensor '", name,
                   "' has bad dimension ", shape[i]);
      numel *= shape[i];
    }
    std::vector<float> values(static_cast<size_t>(numel));
    for (int64_t i = 0; i < numel; ++i) {
      const uint32_t bits = r.u32();
      float f;
      std::memcpy(&f, &bits, 4);
      values[static_cast<size_t>(i)] = f;
    }
    table.emplace_back(std::move(name),
                       Tensor::from_values(std::move(shape), std::move(values)));
  }
  return table;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<uint32_t>(ck.config_json.size()));
  w.bytes(ck.config_json.data(), ck.config_json.size());
  write_table(w, ck.tensors);
  write_table(w, ck.opt_state);
  w.u64(ck.rng_state);
  w.u64(ck.rng_inc);
  w.u32(static_cast<uint32_t>(ck.epoch));
  w.u64(static_cast<uint64_t>(ck.iter));
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  RGP_CHECK_IO(std::memcmp(magic, kMagic, 4) == 0, "'", path,
               "' is not a checkpoint (bad magic)");
  const uint32_t version = r.u32();
  RGP_CHECK_IO(version == Checkpoint::kVersion, "checkpoint '", path,
               "': unsupported format version ", version, " (expected ",
               Checkpoint::kVersion, ")");
  Checkpoint ck;
  const uint32_t cfg_len = r.u32();
  ck.config_json = r.str(cfg_len);
  ck.tensors = read_table(r);
  ck.opt_state = read_table(r);
  ck.rng_state = r.u64();
  ck.rng_inc = r.u64();
  ck.epoch = static_cast<int>(r.u32());
  ck.iter = static_cast<int64_t>(r.u64());
  RGP_CHECK_IO(r.done(), "checkpoint '", path, "' has trailing bytes");
  return ck;
}

Checkpoint snapshot_state(RgpNet& net,
                          const std::vector<std::pair<std::string, Tensor>>* velocities,
                          const Pcg32& rng, int epoch, int64_t iter,
                          std::string config_json) {
  Checkpoint ck;
  ck.config_json = std::move(config_json);
  for (auto& [name, tensor] : net.state_tensors())
    ck.tensors.emplace_back(name, tensor.clone());
  if (velocities) {
    for (const auto& [name, tensor] : *velocities)
      ck.opt_state.emplace_back(name, tensor.clone());
  }
  ck.rng_state = rng.state();
  ck.rng_inc = rng.inc();
  ck.epoch = epoch;
  ck.iter = iter;
  return ck;
}

void load_into_net(const Checkpoint& ck, RgpNet& net, bool remap_head) {
  std::map<std::string, const Tensor*> stored;
  for (const auto& [name, tensor] : ck.tensors) stored[name] = &tensor;

  for (auto& [name, tensor] : net.state_tensors()) {
    auto it = stored.find(name);
    const bool is_head = name.rfind("head.", 0) == 0;
    if (it == stored.end()) {
      if (is_head && remap_head) continue;  // keep the fresh head init
      throw ValueError(detail::format_msg("checkpoint is missing tensor '", name, "'"));
    }
    if (it->second->shape() != tensor.shape()) {
      if (is_head && remap_head) continue;
      throw ValueError(detail::format_msg(
          "checkpoint tensor '", name, "' has shape ",
          shape_str(it->second->shape()), " but the network expects ",
          shape_str(tensor.shape()),
          is_head ? " (class counts differ; pass remap_head to reinitialize)" : ""));
    }
    std::copy(it->second->values().begin(), it->second->values().end(),
              tensor.data());
  }
}

}  // namespace rgp
