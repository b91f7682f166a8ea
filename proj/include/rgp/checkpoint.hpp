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
#ifndef RGP_CHECKPOINT_HPP_
#define RGP_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rgp/net.hpp"
#include "rgp/rng.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// Named-tensor archive. File layout (little-endian throughout):
///   "RGPN" magic, u32 version, u32 config length + JSON bytes,
///   tensor table, optimizer-state table, RNG state (2 x u64),
///   u32 completed epochs, u64 iteration counter.
/// Each table is u32 count, then per tensor: u32 name length, name bytes,
/// u32 rank, u32 dims[rank], raw fp32 values.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::pair<std::string, Tensor>> opt_state;
  uint64_t rng_state = 0;
  uint64_t rng_inc = 0;
  int epoch = 0;
  int64_t iter = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Copies the network (and optional optimizer velocity) state into a
/// checkpoint record. Tensors are deep-copied so later steps do not mutate it.
Checkpoint snapshot_state(RgpNet& net,
                          const std::vector<std::pair<std::string, Tensor>>* velocities,
                          const Pcg32& rng, int epoch, int64_t iter,
                          std::string config_json);

/// Loads checkpoint tensors into the network by name. When the stored head
/// does not match the network's class count: with remap_head the freshly
/// initialized head is kept (the mechanism behind reusing a backbone across
/// label spaces), otherwise it is an error.
void load_into_net(const Checkpoint& ck, RgpNet& net, bool remap_head);

}  // namespace rgp

#endif  // RGP_CHECKPOINT_HPP_
