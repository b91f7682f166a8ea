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
#include "rgp/train.hpp"

#include <algorithm>
#include <cmath>

#include "rgp/common.hpp"
#include "rgp/ops.hpp"

namespace rgp {

void TrainSchedule::validate() const {
  RGP_CHECK(base_lr > 0.0, "schedule: base_lr must be positive, got ", base_lr);
  RGP_CHECK(power > 0.0, "schedule: power must be positive, got ", power);
  RGP_CHECK(momentum >= 0.0 && momentum < 1.0, "schedule: momentum must be in [0,1), got ",
            momentum);
  RGP_CHECK(weight_decay >= 0.0, "schedule: weight_decay must be >= 0, got ",
            weight_decay);
  RGP_CHECK(epochs >= 1, "schedule: epochs must be >= 1, got ", epochs);
  RGP_CHECK(batch_size >= 1, "schedule: batch_size must be >= 1, got ", batch_size);
  RGP_CHECK(max_batch_size >= batch_size, "schedule: max_batch_size ",
            max_batch_size, " smaller than batch_size ", batch_size);
  if (!stages.empty()) theoretical_cost_factor(stages, epochs);
}

ResizeStage TrainSchedule::stage_at(int epoch) const {
  RGP_CHECK(epoch >= 0 && epoch < epochs, "schedule: epoch ", epoch,
            " outside [0,", epochs, ")");
  ResizeStage current{0, 1.0, 1};
  for (const auto& s : stages) {
    if (s.start_epoch <= epoch) current = s;
  }
  return current;
}

int TrainSchedule::effective_batch(int epoch) const {
  const ResizeStage s = stage_at(epoch);
  return std::clamp(batch_size * s.batch_scale, 1, max_batch_size);
}

double poly_lr(int64_t iter, const TrainSchedule& sched) {
  RGP_CHECK(sched.total_iters > 0, "poly_lr: total_iters not set");
  RGP_CHECK(iter >= 0 && iter <= sched.total_iters, "poly_lr: iter ", iter,
            " outside [0,", sched.total_iters, "]");
  const double t = static_cast<double>(iter) / static_cast<double>(sched.total_iters);
  return sched.base_lr * std::pow(1.0 - t, sched.power);
}

double theoretical_cost_factor(const std::vector<ResizeStage>& stages,
                               int total_epochs) {
  RGP_CHECK(!stages.empty(), "cost factor: stage list is empty");
  RGP_CHECK(total_epochs >= 1, "cost factor: total_epochs must be >= 1, got ",
            total_epochs);
  RGP_CHECK(stages.front().start_epoch == 0,
            "cost factor: first stage must start at epoch 0, got ",
            stages.front().start_epoch);
  double factor = 0.0;
  double prev_resize = 0.0;
  for (size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    RGP_CHECK(s.resize_factor == 0.25 || s.resize_factor == 0.5 ||
                  s.resize_factor == 1.0,
              "cost factor: resize_factor must be 1/4, 1/2 or 1, got ",
              s.resize_factor);
    RGP_CHECK(s.resize_factor >= prev_resize,
              "cost factor: resize factors must be non-decreasing");
    RGP_CHECK(s.batch_scale >= 1, "cost factor: batch_scale must be >= 1, got ",
              s.batch_scale);
    prev_resize = s.resize_factor;
    const int begin = s.start_epoch;
    const int end = i + 1 < stages.size() ? stages[i + 1].start_epoch : total_epochs;
    RGP_CHECK(end > begin, "cost factor: stage ", i, " starting at epoch ", begin,
              " overlaps the next stage (or runs past the schedule)");
    RGP_CHECK(begin < total_epochs, "cost factor: stage ", i, " starts at epoch ",
              begin, " beyond total ", total_epochs);
    factor += s.resize_factor * s.resize_factor *
              (static_cast<double>(end - begin) / total_epochs);
  }
  return factor;
}

SgdMomentum::SgdMomentum(double momentum, double weight_decay)
    : momentum_(momentum), weight_decay_(weight_decay) {
  RGP_CHECK(momentum >= 0.0 && momentum < 1.0, "sgd: momentum must be in [0,1), got ",
            momentum);
  RGP_CHECK(weight_decay >= 0.0, "sgd: weight_decay must be >= 0, got ",
            weight_decay);
}

void SgdMomentum::attach(std::vector<std::pair<std::string, Tensor>> params) {
  params_ = std::move(params);
  velocity_.clear();
  velocity_.reserve(params_.size());
  for (auto& [name, p] : params_)
    velocity_.emplace_back("opt.v." + name, Tensor::zeros(p.shape()));
}

void SgdMomentum::step(double lr) {
  RGP_CHECK(!params_.empty(), "sgd: no parameters attached");
  const float mu = static_cast<float>(momentum_);
  const float wd = static_cast<float>(weight_decay_);
  const float flr = static_cast<float>(lr);
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    Tensor& v = velocity_[i].second;
    RGP_CHECK_SHAPE(p.shape() == v.shape(), "sgd: parameter '", params_[i].first,
                    "' shape changed after attach");
    if (!p.has_grad()) continue;  // parameter unused in this graph
    const float* g = p.grad().data();
    float* pv = p.data();
    float* vv = v.data();
    const int64_t n = p.numel();
    for (int64_t j = 0; j < n; ++j) {
      const float grad = g[j] + wd * pv[j];
      vv[j] = mu * vv[j] + grad;
      pv[j] -= flr * vv[j];
    }
  }
}

void SgdMomentum::zero_grad() {
  for (auto& [name, p] : params_) {
    (void)name;
    if (p.has_grad()) p.zero_grad();
  }
}

LabelMap resize_labels_nearest(const LabelMap& lm, int out_h, int out_w) {
  RGP_CHECK(out_h >= 1 && out_w >= 1, "label resize: output ", out_h, "x", out_w,
            " is smaller than 1x1");
  LabelMap out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    int sy = static_cast<int>(std::floor((y + 0.5) * lm.height / out_h));
    sy = std::clamp(sy, 0, lm.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int sx = static_cast<int>(std::floor((x + 0.5) * lm.width / out_w));
      sx = std::clamp(sx, 0, lm.width - 1);
      out.at(y, x) = lm.at(sy, sx);
    }
  }
  return out;
}

std::pair<Tensor, LabelMap> resize_pair(const Tensor& image_chw,
                                        const LabelMap& lm, double factor) {
  RGP_CHECK(factor > 0.0, "resize_pair: factor must be positive, got ", factor);
  RGP_CHECK_SHAPE(image_chw.ndim() == 3 && image_chw.dim(0) == 3,
                  "resize_pair: image must be [3,H,W], got ",
                  shape_str(image_chw.shape()));
  RGP_CHECK_SHAPE(image_chw.dim(1) == lm.height && image_chw.dim(2) == lm.width,
                  "resize_pair: image ", image_chw.dim(1), "x", image_chw.dim(2),
                  " does not match labels ", lm.height, "x", lm.width);
  const int out_h = static_cast<int>(std::lround(lm.height * factor));
  const int out_w = static_cast<int>(std::lround(lm.width * factor));
  RGP_CHECK(out_h >= 1 && out_w >= 1, "resize_pair: output ", out_h, "x", out_w,
            " is smaller than 1x1");
  if (out_h == lm.height && out_w == lm.width) return {image_chw, lm};
  Tensor batched = Tensor::from_values({1, 3, lm.height, lm.width},
                                       image_chw.values());
  Tensor resized = bilinear_resize(batched, out_h, out_w);
  Tensor img = Tensor::from_values({3, out_h, out_w}, resized.values());
  return {img, resize_labels_nearest(lm, out_h, out_w)};
}

void AugmentConfig::validate() const {
  RGP_CHECK(scale_min > 0.0 && scale_max >= scale_min,
            "augment: scale range [", scale_min, ",", scale_max, "] is invalid");
  RGP_CHECK(hflip_prob >= 0.0 && hflip_prob <= 1.0,
            "augment: hflip_prob must be in [0,1], got ", hflip_prob);
  RGP_CHECK(crop_size >= 1, "augment: crop_size must be >= 1, got ", crop_size);
}

std::pair<Tensor, LabelMap> augment(const Tensor& image_chw, const LabelMap& lm,
                                    const AugmentConfig& cfg, Pcg32& rng) {
  cfg.validate();
  RGP_CHECK_SHAPE(image_chw.ndim() == 3 && image_chw.dim(1) == lm.height &&
                      image_chw.dim(2) == lm.width,
                  "augment: image/label dimensions differ");
  Tensor img = image_chw;
  LabelMap labels = lm;
  // Rescale.
  const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
  if (scale != 1.0) {
    auto pair = resize_pair(img, labels, scale);
    img = pair.first;
    labels = pair.second;
  }
  // Crop (pad with zero image / ignore labels when the input is short).
  const int crop = cfg.crop_size;
  if (labels.height != crop || labels.width != crop) {
    Tensor out = Tensor::zeros({3, crop, crop});
    LabelMap out_lm(crop, crop, kIgnoreLabel);
    const int max_oy = std::max(0, labels.height - crop);
    const int max_ox = std::max(0, labels.width - crop);
    const int oy = max_oy > 0 ? static_cast<int>(rng.next_below(max_oy + 1)) : 0;
    const int ox = max_ox > 0 ? static_cast<int>(rng.next_below(max_ox + 1)) : 0;
    const int copy_h = std::min(crop, labels.height);
    const int copy_w = std::min(crop, labels.width);
    const float* src = img.data();
    float* dst = out.data();
    const int64_t src_hw = static_cast<int64_t>(labels.height) * labels.width;
    const int64_t dst_hw = static_cast<int64_t>(crop) * crop;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < copy_h; ++y) {
        const float* s = src + c * src_hw + static_cast<int64_t>(oy + y) * labels.width + ox;
        float* d = dst + c * dst_hw + static_cast<int64_t>(y) * crop;
        std::copy(s, s + copy_w, d);
      }
    }
    for (int y = 0; y < copy_h; ++y)
      for (int x = 0; x < copy_w; ++x) out_lm.at(y, x) = labels.at(oy + y, ox + x);
    img = out;
    labels = out_lm;
  }
  // Left-right flip.
  if (cfg.hflip_prob > 0.0 && rng.bernoulli(cfg.hflip_prob)) {
    Tensor batched = Tensor::from_values({1, 3, labels.height, labels.width},
                                         img.values());
    Tensor flipped = hflip(batched);
    img = Tensor::from_values({3, labels.height, labels.width}, flipped.values());
    LabelMap fl(labels.height, labels.width);
    for (int y = 0; y < labels.height; ++y)
      for (int x = 0; x < labels.width; ++x)
        fl.at(y, x) = labels.at(y, labels.width - 1 - x);
    labels = fl;
  }
  return {img, labels};
}

}  // namespace rgp
