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
#ifndef RGP_LOSSES_HPP_
#define RGP_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgp/ops.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

inline constexpr uint8_t kIgnoreLabel = 255;

/// 2-D class-id grid; values in [0, num_classes) plus the 255 ignore sentinel.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> labels;

  LabelMap() = default;
  LabelMap(int h, int w, uint8_t fill = 0)
      : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

  uint8_t at(int y, int x) const {
    return labels[static_cast<size_t>(y) * width + x];
  }
  uint8_t& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
  int64_t size() const { return static_cast<int64_t>(height) * width; }

  void check_classes(int num_classes) const;
};

/// Border-pixel mask plus, for every pixel, the multi-hot set of class ids
/// present in its k x k window (replication padded, ignore excluded).
struct BorderMask {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<uint8_t> border;    // H*W, 1 at border pixels
  std::vector<uint8_t> multihot;  // C*H*W planes

  bool is_border(int y, int x) const {
    return border[static_cast<size_t>(y) * width + x] != 0;
  }
  bool in_window_set(int c, int y, int x) const {
    return multihot[(static_cast<size_t>(c) * height + y) * width + x] != 0;
  }
  int64_t border_count() const;
};

/// Border detection via one-hot label planes dilated by a stride-1 max-pool.
/// A pixel is a border pixel iff its window holds more than one unique
/// non-ignore label. k must be odd and >= 3.
BorderMask detect_borders(const LabelMap& lm, int k, int num_classes);

struct OhemConfig {
  double theta = 0.6;
  int64_t min_kept = 5000;
};

/// Hard-pixel selection: keeps pixels whose target-class probability is below
/// theta, topped up with the next-hardest pixels to min(min_kept, valid).
/// Ties at the cut are broken by row-major pixel index. Returns a keep mask
/// over the flattened (image-major) pixel order.
std::vector<uint8_t> ohem_keep_mask(std::span<const float> target_prob,
                                    std::span<const uint8_t> valid,
                                    double theta, int64_t min_kept);

enum class LossMode { kCe, kOhem, kCeRelax, kOhemRelax };

LossMode loss_mode_from_string(const std::string& s);
std::string loss_mode_to_string(LossMode m);
bool loss_mode_uses_relax(LossMode m);
bool loss_mode_uses_ohem(LossMode m);

struct LossOptions {
  LossMode mode = LossMode::kCe;
  OhemConfig ohem;
  int relax_kernel = 3;
};

/// Unified segmentation loss over batch logits [N,C,H,W] and N label maps.
/// Border pixels (when the mode relaxes) contribute -log sum_{c in window} p_c;
/// remaining valid pixels contribute plain CE, optionally filtered by OHEM.
/// Mean over counted pixels; differentiable; errors when nothing is counted.
Tensor segmentation_loss(const Tensor& logits, std::span<const LabelMap> labels,
                         const LossOptions& opts);

/// Mean negative log softmax probability of the target; ignore excluded.
Tensor cross_entropy(const Tensor& logits, std::span<const LabelMap> labels);

/// CE restricted to OHEM-selected hard pixels.
Tensor ohem_cross_entropy(const Tensor& logits, std::span<const LabelMap> labels,
                          const OhemConfig& cfg);

/// Border pixels take the relaxed term over their window label set
/// (precomputed masks, one per image); all other valid pixels take CE.
Tensor label_relaxation_loss(const Tensor& logits, std::span<const LabelMap> labels,
                             std::span<const BorderMask> masks);

}  // namespace rgp

#endif  // RGP_LOSSES_HPP_
