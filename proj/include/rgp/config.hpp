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
#ifndef RGP_CONFIG_HPP_
#define RGP_CONFIG_HPP_

#include <string>

#include "json.hpp"
#include "rgp/losses.hpp"
#include "rgp/net.hpp"
#include "rgp/train.hpp"

namespace rgp {

/// Invalid configuration contents; messages carry the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The complete run description: network, schedule, augmentation, loss mode
/// and its knobs, seed and default paths. Unknown JSON keys are rejected.
struct RunConfig {
  NetworkConfig network;
  TrainSchedule schedule;
  AugmentConfig augment;
  LossMode loss_mode = LossMode::kCe;
  OhemConfig ohem;
  bool relax_enabled = false;
  int relax_kernel = 3;
  uint64_t seed = 1;
  std::string data_path;
  std::string out_path;

  void validate() const;
  LossOptions loss_options() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  /// Canonical serialization (sorted keys, fixed formatting); two configs are
  /// interchangeable iff their canonical strings match.
  std::string canonical_string() const;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace rgp

#endif  // RGP_CONFIG_HPP_
