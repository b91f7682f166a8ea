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
#include "rgp/config.hpp"

#include <fstream>
#include <set>

namespace rgp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
  if (!j.is_object())
    throw ConfigError(detail::format_msg("config: '", scope,
                                         "' must be a JSON object"));
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError(detail::format_msg("config: unknown key '",
                                           scope.empty() ? key : scope + "." + key,
                                           "'"));
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(detail::format_msg("config: field '", scope, ".", key,
                                         "' has the wrong type"));
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    network.validate();
    schedule.validate();
    augment.validate();
    RGP_CHECK(ohem.theta > 0.0 && ohem.theta < 1.0,
              "ohem.theta must be in (0,1), got ", ohem.theta);
    RGP_CHECK(ohem.min_kept >= 1, "ohem.min_kept must be >= 1, got ", ohem.min_kept);
    RGP_CHECK(relax_kernel >= 3 && relax_kernel % 2 == 1,
              "label_relaxation.kernel must be odd and >= 3, got ", relax_kernel);
    RGP_CHECK(relax_enabled == loss_mode_uses_relax(loss_mode),
              "label_relaxation.enabled = ", relax_enabled ? "true" : "false",
              " contradicts loss_mode '", loss_mode_to_string(loss_mode), "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

LossOptions RunConfig::loss_options() const {
  LossOptions o;
  o.mode = loss_mode;
  o.ohem = ohem;
  o.relax_kernel = relax_kernel;
  return o;
}

json RunConfig::to_json() const {
  json j;
  j["network"] = {
      {"num_levels", network.num_levels},
      {"encoder_channels", network.encoder_channels},
      {"reduction_factor", network.reduction_factor},
      {"num_classes", network.num_classes},
      {"enable_adaptor_downsample", network.enable_adaptor_downsample},
      {"encoder_blocks_per_level", network.encoder_blocks_per_level},
      {"deconv_kernel", network.deconv_kernel},
      {"activation", network.activation},
  };
  json stages = json::array();
  for (const auto& s : schedule.stages)
    stages.push_back({{"start_epoch", s.start_epoch},
                      {"resize_factor", s.resize_factor},
                      {"batch_scale", s.batch_scale}});
  j["schedule"] = {
      {"base_lr", schedule.base_lr},
      {"power", schedule.power},
      {"momentum", schedule.momentum},
      {"weight_decay", schedule.weight_decay},
      {"epochs", schedule.epochs},
      {"batch_size", schedule.batch_size},
      {"max_batch_size", schedule.max_batch_size},
      {"stages", stages},
  };
  j["augment"] = {
      {"enabled", augment.enabled},
      {"crop_size", augment.crop_size},
      {"scale_min", augment.scale_min},
      {"scale_max", augment.scale_max},
      {"hflip_prob", augment.hflip_prob},
      {"base_size", augment.base_size},
  };
  j["loss_mode"] = loss_mode_to_string(loss_mode);
  j["ohem"] = {{"theta", ohem.theta}, {"min_kept", ohem.min_kept}};
  j["label_relaxation"] = {{"enabled", relax_enabled}, {"kernel", relax_kernel}};
  j["seed"] = seed;
  j["paths"] = {{"data", data_path}, {"out", out_path}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  reject_unknown(j, {"network", "schedule", "augment", "loss_mode", "ohem",
                     "label_relaxation", "seed", "paths"},
                 "");
  if (j.contains("network")) {
    const json& n = j.at("network");
    reject_unknown(n,
                   {"num_levels", "encoder_channels", "reduction_factor",
                    "num_classes", "enable_adaptor_downsample",
                    "encoder_blocks_per_level", "deconv_kernel", "activation"},
                   "network");
    read_field(n, "num_levels", cfg.network.num_levels, "network");
    read_field(n, "encoder_channels", cfg.network.encoder_channels, "network");
    read_field(n, "reduction_factor", cfg.network.reduction_factor, "network");
    read_field(n, "num_classes", cfg.network.num_classes, "network");
    read_field(n, "enable_adaptor_downsample",
               cfg.network.enable_adaptor_downsample, "network");
    read_field(n, "encoder_blocks_per_level",
               cfg.network.encoder_blocks_per_level, "network");
    read_field(n, "deconv_kernel", cfg.network.deconv_kernel, "network");
    read_field(n, "activation", cfg.network.activation, "network");
  }
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    reject_unknown(s,
                   {"base_lr", "power", "momentum", "weight_decay", "epochs",
                    "batch_size", "max_batch_size", "stages"},
                   "schedule");
    read_field(s, "base_lr", cfg.schedule.base_lr, "schedule");
    read_field(s, "power", cfg.schedule.power, "schedule");
    read_field(s, "momentum", cfg.schedule.momentum, "schedule");
    read_field(s, "weight_decay", cfg.schedule.weight_decay, "schedule");
    read_field(s, "epochs", cfg.schedule.epochs, "schedule");
    read_field(s, "batch_size", cfg.schedule.batch_size, "schedule");
    read_field(s, "max_batch_size", cfg.schedule.max_batch_size, "schedule");
    if (s.contains("stages")) {
      if (!s.at("stages").is_array())
        throw ConfigError("config: 'schedule.stages' must be an array");
      cfg.schedule.stages.clear();
      int idx = 0;
      for (const auto& st : s.at("stages")) {
        const std::string scope = "schedule.stages[" + std::to_string(idx) + "]";
        reject_unknown(st, {"start_epoch", "resize_factor", "batch_scale"}, scope);
        ResizeStage stage;
        read_field(st, "start_epoch", stage.start_epoch, scope);
        read_field(st, "resize_factor", stage.resize_factor, scope);
        read_field(st, "batch_scale", stage.batch_scale, scope);
        cfg.schedule.stages.push_back(stage);
        ++idx;
      }
    }
  }
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    reject_unknown(a,
                   {"enabled", "crop_size", "scale_min", "scale_max",
                    "hflip_prob", "base_size"},
                   "augment");
    read_field(a, "enabled", cfg.augment.enabled, "augment");
    read_field(a, "crop_size", cfg.augment.crop_size, "augment");
    read_field(a, "scale_min", cfg.augment.scale_min, "augment");
    read_field(a, "scale_max", cfg.augment.scale_max, "augment");
    read_field(a, "hflip_prob", cfg.augment.hflip_prob, "augment");
    read_field(a, "base_size", cfg.augment.base_size, "augment");
  }
  if (j.contains("loss_mode")) {
    std::string mode;
    read_field(j, "loss_mode", mode, "");
    try {
      cfg.loss_mode = loss_mode_from_string(mode);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    cfg.relax_enabled = loss_mode_uses_relax(cfg.loss_mode);
  }
  if (j.contains("ohem")) {
    const json& o = j.at("ohem");
    reject_unknown(o, {"theta", "min_kept"}, "ohem");
    read_field(o, "theta", cfg.ohem.theta, "ohem");
    read_field(o, "min_kept", cfg.ohem.min_kept, "ohem");
  }
  if (j.contains("label_relaxation")) {
    const json& r = j.at("label_relaxation");
    reject_unknown(r, {"enabled", "kernel"}, "label_relaxation");
    read_field(r, "enabled", cfg.relax_enabled, "label_relaxation");
    read_field(r, "kernel", cfg.relax_kernel, "label_relaxation");
  }
  read_field(j, "seed", cfg.seed, "");
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    reject_unknown(p, {"data", "out"}, "paths");
    read_field(p, "data", cfg.data_path, "paths");
    read_field(p, "out", cfg.out_path, "paths");
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::canonical_string() const {
  return to_json().dump();  // nlohmann objects keep sorted keys
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  RGP_CHECK_IO(in.good(), "cannot open config '", path, "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(detail::format_msg("config '", path, "': invalid JSON (",
                                         e.what(), ")"));
  }
  return RunConfig::from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  RGP_CHECK_IO(out.good(), "cannot write config '", path, "'");
  out << cfg.to_json().dump(2) << "\n";
}

}  // namespace rgp
