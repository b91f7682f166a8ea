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
#ifndef RGP_METRICS_HPP_
#define RGP_METRICS_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "rgp/losses.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// C x C counts, rows = ground truth, columns = prediction. Ignore pixels are
/// never counted, so total() equals the number of evaluated pixels.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<int64_t> counts;

  explicit ConfusionMatrix(int c = 0)
      : num_classes(c), counts(static_cast<size_t>(c) * c, 0) {}

  int64_t& at(int gt, int pred) {
    return counts[static_cast<size_t>(gt) * num_classes + pred];
  }
  int64_t at(int gt, int pred) const {
    return counts[static_cast<size_t>(gt) * num_classes + pred];
  }
  int64_t total() const;

  void accumulate(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);
};

/// Per-class IoU; classes absent from both ground truth and prediction get
/// nullopt and are excluded from the mean.
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm);
double miou(const ConfusionMatrix& cm);
double pixel_accuracy(const ConfusionMatrix& cm);

/// Per-pixel Shannon entropy (natural log) of the channel softmax:
/// logits [N,C,H,W] -> [N,H,W], each value in [0, ln C].
Tensor entropy_map(const Tensor& logits);

/// H(a) - H(b) per pixel.
Tensor entropy_diff(const Tensor& logits_a, const Tensor& logits_b);

/// Row-major argmax over channels for image n of a [N,C,H,W] tensor.
LabelMap argmax_labels(const Tensor& logits, int n = 0);

/// Averaged softmax probabilities over rescaled (and optionally mirrored)
/// forward passes, resized back to the input resolution. Scales snap to the
/// nearest multiple of `size_multiple` so the network contract holds.
Tensor multi_scale_eval(const std::function<Tensor(const Tensor&)>& forward_fn,
                        const Tensor& image, const std::vector<double>& scales,
                        bool flip, int size_multiple = 32);

}  // namespace rgp

#endif  // RGP_METRICS_HPP_
