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
#ifndef RGP_TRAIN_HPP_
#define RGP_TRAIN_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rgp/losses.hpp"
#include "rgp/rng.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// One progressive-resizing stage: from start_epoch on, inputs are resized by
/// resize_factor and the batch grows by batch_scale (nominally 1/factor^2).
struct ResizeStage {
  int start_epoch = 0;
  double resize_factor = 1.0;
  int batch_scale = 1;
};

struct TrainSchedule {
  double base_lr = 1e-3;
  double power = 0.9;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 32;
  int batch_size = 4;
  int max_batch_size = 64;
  std::vector<ResizeStage> stages;  // empty = one full-scale stage
  int64_t total_iters = 0;          // filled by the trainer

  void validate() const;
  ResizeStage stage_at(int epoch) const;
  int effective_batch(int epoch) const;
};

/// base_lr * (1 - iter/total_iters)^power, evaluated in double.
double poly_lr(int64_t iter, const TrainSchedule& sched);

/// Sum over stages of resize_factor^2 * (epochs in stage / total).
double theoretical_cost_factor(const std::vector<ResizeStage>& stages,
                               int total_epochs);

/// Classic momentum SGD with L2 coupled into the gradient:
/// v <- mu*v + g + wd*theta; theta <- theta - lr*v.
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay);

  void attach(std::vector<std::pair<std::string, Tensor>> params);
  void step(double lr);
  void zero_grad();

  std::vector<std::pair<std::string, Tensor>>& params() { return params_; }
  std::vector<std::pair<std::string, Tensor>>& velocities() { return velocity_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::pair<std::string, Tensor>> velocity_;
};

/// Nearest-neighbor label resize: src = floor((dst + 0.5) * in/out). The
/// output label set is always a subset of the input's.
LabelMap resize_labels_nearest(const LabelMap& lm, int out_h, int out_w);

/// Bilinear image / nearest label resize by one factor.
std::pair<Tensor, LabelMap> resize_pair(const Tensor& image_chw,
                                        const LabelMap& lm, double factor);

struct AugmentConfig {
  bool enabled = true;
  int crop_size = 1024;
  double scale_min = 0.5;
  double scale_max = 2.0;
  double hflip_prob = 0.5;
  int base_size = 0;  // informational; scaling is relative to the source

  void validate() const;
};

/// Random rescale -> crop (padding with zeros / ignore labels when short) ->
/// horizontal flip. Fully reproducible from the generator state.
std::pair<Tensor, LabelMap> augment(const Tensor& image_chw, const LabelMap& lm,
                                    const AugmentConfig& cfg, Pcg32& rng);

}  // namespace rgp

#endif  // RGP_TRAIN_HPP_
