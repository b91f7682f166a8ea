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
#include "rgp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "rgp/autograd.hpp"
#include "rgp/common.hpp"

namespace rgp {

void LabelMap::check_classes(int num_classes) const {
  for (int64_t i = 0; i < size(); ++i) {
    const uint8_t v = labels[static_cast<size_t>(i)];
    RGP_CHECK(v == kIgnoreLabel || v < num_classes, "label value ",
              static_cast<int>(v), " at flat index ", i,
              " outside [0,", num_classes, ") and not the ignore sentinel");
  }
}

int64_t BorderMask::border_count() const {
  return std::count_if(border.begin(), border.end(),
                       [](uint8_t b) { return b != 0; });
}

BorderMask detect_borders(const LabelMap& lm, int k, int num_classes) {
  RGP_CHECK(k % 2 == 1, "detect_borders: window size must be odd, got ", k);
  RGP_CHECK(k >= 3, "detect_borders: window size must be >= 3, got ", k);
  RGP_CHECK(num_classes >= 1, "detect_borders: num_classes must be >= 1, got ",
            num_classes);
  RGP_CHECK(lm.height >= 1 && lm.width >= 1, "detect_borders: empty label map");
  lm.check_classes(num_classes);

  const int h = lm.height, w = lm.width;
  Tensor onehot = Tensor::zeros({1, num_classes, h, w});
  float* oh = onehot.data();
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int64_t j = 0; j < hw; ++j) {
    const uint8_t v = lm.labels[static_cast<size_t>(j)];
    if (v != kIgnoreLabel) oh[static_cast<int64_t>(v) * hw + j] = 1.0f;
  }
  Tensor dilated = maxpool2d(onehot, k, /*stride=*/1);

  BorderMask mask;
  mask.height = h;
  mask.width = w;
  mask.num_classes = num_classes;
  mask.multihot.assign(static_cast<size_t>(num_classes) * hw, 0);
  mask.border.assign(static_cast<size_t>(hw), 0);
  const float* dd = dilated.data();
  for (int64_t j = 0; j < hw; ++j) {
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
      if (dd[static_cast<int64_t>(c) * hw + j] > 0.5f) {
        mask.multihot[static_cast<size_t>(c) * hw + j] = 1;
        ++present;
      }
    }
    if (present > 1 && lm.labels[static_cast<size_t>(j)] != kIgnoreLabel)
      mask.border[static_cast<size_t>(j)] = 1;
  }
  return mask;
}

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "ce") return LossMode::kCe;
  if (s == "ohem") return LossMode::kOhem;
  if (s == "ce+lr") return LossMode::kCeRelax;
  if (s == "ohem+lr") return LossMode::kOhemRelax;
  throw ValueError(detail::format_msg(
      "loss_mode: unknown value '", s, "' (expected ce, ohem, ce+lr, ohem+lr)"));
}

std::string loss_mode_to_string(LossMode m) {
  switch (m) {
    case LossMode::kCe: return "ce";
    case LossMode::kOhem: return "ohem";
    case LossMode::kCeRelax: return "ce+lr";
    case LossMode::kOhemRelax: return "ohem+lr";
  }
  return "ce";
}

bool loss_mode_uses_relax(LossMode m) {
  return m == LossMode::kCeRelax || m == LossMode::kOhemRelax;
}

bool loss_mode_uses_ohem(LossMode m) {
  return m == LossMode::kOhem || m == LossMode::kOhemRelax;
}

std::vector<uint8_t> ohem_keep_mask(std::span<const float> target_prob,
                                    std::span<const uint8_t> valid,
                                    double theta, int64_t min_kept) {
  RGP_CHECK(theta > 0.0 && theta < 1.0, "ohem: theta must be in (0,1), got ", theta);
  RGP_CHECK(min_kept >= 1, "ohem: min_kept must be positive, got ", min_kept);
  RGP_CHECK(target_prob.size() == valid.size(),
            "ohem: probability/valid size mismatch");
  const int64_t n = static_cast<int64_t>(target_prob.size());
  std::vector<uint8_t> keep(static_cast<size_t>(n), 0);

  int64_t n_valid = 0;
  int64_t n_below = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (!valid[static_cast<size_t>(i)]) continue;
    ++n_valid;
    if (target_prob[static_cast<size_t>(i)] < theta) {
      keep[static_cast<size_t>(i)] = 1;
      ++n_below;
    }
  }
  if (n_valid == 0) return keep;

  const int64_t target = std::min(std::max(n_below, min_kept), n_valid);
  if (n_below >= target) return keep;

  // Top up with the next-hardest pixels; sort is stable in (prob, index).
  std::vector<int64_t> rest;
  rest.reserve(static_cast<size_t>(n_valid - n_below));
  for (int64_t i = 0; i < n; ++i) {
    if (valid[static_cast<size_t>(i)] && !keep[static_cast<size_t>(i)])
      rest.push_back(i);
  }
  std::sort(rest.begin(), rest.end(), [&](int64_t a, int64_t b) {
    const float pa = target_prob[static_cast<size_t>(a)];
    const float pb = target_prob[static_cast<size_t>(b)];
    if (pa != pb) return pa < pb;
    return a < b;
  });
  for (int64_t i = 0; i < target - n_below; ++i)
    keep[static_cast<size_t>(rest[static_cast<size_t>(i)])] = 1;
  return keep;
}

namespace {

// Pixel roles resolved during the forward pass, reused by the backward rule.
enum PixelStatus : uint8_t { kSkip = 0, kCeCounted = 1, kBorderCounted = 2 };

constexpr float kProbFloor = 1e-30f;  // keeps -log finite on underflowed probs

void check_loss_inputs(const Tensor& logits, std::span<const LabelMap> labels) {
  RGP_CHECK_SHAPE(logits.defined() && logits.ndim() == 4,
                  "segmentation loss: logits must be [N,C,H,W], got ",
                  logits.defined() ? shape_str(logits.shape()) : "<undefined>");
  RGP_CHECK_SHAPE(static_cast<size_t>(logits.dim(0)) == labels.size(),
                  "segmentation loss: batch size ", logits.dim(0),
                  " does not match label map count ", labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    RGP_CHECK_SHAPE(labels[i].height == logits.dim(2) &&
                        labels[i].width == logits.dim(3),
                    "segmentation loss: label map ", i, " is ", labels[i].height,
                    "x", labels[i].width, " but logits are ", logits.dim(2), "x",
                    logits.dim(3));
    labels[i].check_classes(logits.dim(1));
  }
}

}  // namespace

namespace {

Tensor segmentation_loss_impl(const Tensor& logits,
                              std::span<const LabelMap> labels,
                              const LossOptions& opts,
                              std::vector<BorderMask> masks) {
  check_loss_inputs(logits, labels);
  const int n = logits.dim(0), c = logits.dim(1);
  const int64_t hw = static_cast<int64_t>(logits.dim(2)) * logits.dim(3);
  const int64_t img = static_cast<int64_t>(c) * hw;
  const bool use_relax = loss_mode_uses_relax(opts.mode);
  const bool use_ohem = loss_mode_uses_ohem(opts.mode);

  if (use_relax && masks.empty()) {
    masks.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      masks.push_back(detect_borders(labels[static_cast<size_t>(i)],
                                     opts.relax_kernel, c));
  }

  // Softmax probabilities, kept for the backward rule.
  auto probs = std::make_shared<std::vector<float>>(
      static_cast<size_t>(logits.numel()));
  {
    const float* xd = logits.data();
    float* pv = probs->data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < hw; ++j) {
        const int64_t base = i * img + j;
        float mx = xd[base];
        for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xd[base + ch * hw]);
        float denom = 0.0f;
        for (int ch = 0; ch < c; ++ch) {
          const float e = std::exp(xd[base + ch * hw] - mx);
          pv[base + ch * hw] = e;
          denom += e;
        }
        const float inv = 1.0f / denom;
        for (int ch = 0; ch < c; ++ch) pv[base + ch * hw] *= inv;
      }
    }
  }

  auto status = std::make_shared<std::vector<uint8_t>>(
      static_cast<size_t>(n) * hw, kSkip);
  auto border_sum = std::make_shared<std::vector<float>>();
  if (use_relax) border_sum->assign(static_cast<size_t>(n) * hw, 0.0f);

  const float* pv = probs->data();

  // Resolve border pixels first; the OHEM pool is everything else valid.
  std::vector<float> pool_prob(static_cast<size_t>(n) * hw, 0.0f);
  std::vector<uint8_t> pool_valid(static_cast<size_t>(n) * hw, 0);
  for (int64_t i = 0; i < n; ++i) {
    const LabelMap& lm = labels[static_cast<size_t>(i)];
    for (int64_t j = 0; j < hw; ++j) {
      const uint8_t y = lm.labels[static_cast<size_t>(j)];
      if (y == kIgnoreLabel) continue;
      const int64_t flat = i * hw + j;
      if (use_relax && masks[static_cast<size_t>(i)].border[static_cast<size_t>(j)]) {
        const BorderMask& m = masks[static_cast<size_t>(i)];
        float s = 0.0f;
        for (int ch = 0; ch < c; ++ch) {
          if (m.multihot[static_cast<size_t>(ch) * hw + j])
            s += pv[i * img + ch * hw + j];
        }
        (*border_sum)[static_cast<size_t>(flat)] = s;
        (*status)[static_cast<size_t>(flat)] = kBorderCounted;
      } else {
        pool_prob[static_cast<size_t>(flat)] = pv[i * img + static_cast<int64_t>(y) * hw + j];
        pool_valid[static_cast<size_t>(flat)] = 1;
      }
    }
  }

  if (use_ohem) {
    std::vector<uint8_t> keep = ohem_keep_mask(pool_prob, pool_valid,
                                               opts.ohem.theta, opts.ohem.min_kept);
    for (size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) (*status)[i] = kCeCounted;
  } else {
    for (size_t i = 0; i < pool_valid.size(); ++i)
      if (pool_valid[i]) (*status)[i] = kCeCounted;
  }

  int64_t count = 0;
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const LabelMap& lm = labels[static_cast<size_t>(i)];
    for (int64_t j = 0; j < hw; ++j) {
      const int64_t flat = i * hw + j;
      const uint8_t st = (*status)[static_cast<size_t>(flat)];
      if (st == kSkip) continue;
      ++count;
      if (st == kBorderCounted) {
        acc -= std::log(std::max((*border_sum)[static_cast<size_t>(flat)], kProbFloor));
      } else {
        const uint8_t y = lm.labels[static_cast<size_t>(j)];
        acc -= std::log(std::max(pv[i * img + static_cast<int64_t>(y) * hw + j],
                                 kProbFloor));
      }
    }
  }
  RGP_CHECK(count > 0, "segmentation loss: no pixels to count (all ignored?)");
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(count)));

  GradientTape* tape = GradientTape::active();
  if (tape && logits.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = logits, oc = out;
    auto labels_copy = std::make_shared<std::vector<LabelMap>>(labels.begin(),
                                                               labels.end());
    auto masks_copy = std::make_shared<std::vector<BorderMask>>(std::move(masks));
    tape->record(out, [xc, oc, probs, status, border_sum, labels_copy, masks_copy,
                  n, c, hw, img, count]() mutable {
      if (!oc.has_grad()) return;
      const float g = oc.grad()[0] / static_cast<float>(count);
      const float* pvv = probs->data();
      float* dx = xc.grad_data();
      for (int64_t i = 0; i < n; ++i) {
        const LabelMap& lm = (*labels_copy)[static_cast<size_t>(i)];
        for (int64_t j = 0; j < hw; ++j) {
          const int64_t flat = i * hw + j;
          const uint8_t st = (*status)[static_cast<size_t>(flat)];
          if (st == kSkip) continue;
          const int64_t base = i * img + j;
          if (st == kBorderCounted) {
            const BorderMask& m = (*masks_copy)[static_cast<size_t>(i)];
            const float s = std::max((*border_sum)[static_cast<size_t>(flat)],
                                     kProbFloor);
            for (int ch = 0; ch < c; ++ch) {
              const float p = pvv[base + ch * hw];
              const float in_set =
                  m.multihot[static_cast<size_t>(ch) * hw + j] ? 1.0f : 0.0f;
              dx[base + ch * hw] += g * (p - in_set * p / s);
            }
          } else {
            const uint8_t y = lm.labels[static_cast<size_t>(j)];
            for (int ch = 0; ch < c; ++ch) {
              const float p = pvv[base + ch * hw];
              const float t = (ch == static_cast<int>(y)) ? 1.0f : 0.0f;
              dx[base + ch * hw] += g * (p - t);
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor segmentation_loss(const Tensor& logits, std::span<const LabelMap> labels,
                         const LossOptions& opts) {
  return segmentation_loss_impl(logits, labels, opts, {});
}

Tensor cross_entropy(const Tensor& logits, std::span<const LabelMap> labels) {
  LossOptions opts;
  opts.mode = LossMode::kCe;
  return segmentation_loss_impl(logits, labels, opts, {});
}

Tensor ohem_cross_entropy(const Tensor& logits, std::span<const LabelMap> labels,
                          const OhemConfig& cfg) {
  LossOptions opts;
  opts.mode = LossMode::kOhem;
  opts.ohem = cfg;
  return segmentation_loss_impl(logits, labels, opts, {});
}

Tensor label_relaxation_loss(const Tensor& logits,
                             std::span<const LabelMap> labels,
                             std::span<const BorderMask> masks) {
  check_loss_inputs(logits, labels);
  RGP_CHECK_SHAPE(masks.size() == labels.size(),
                  "label_relaxation_loss: mask count ", masks.size(),
                  " does not match label count ", labels.size());
  for (size_t i = 0; i < masks.size(); ++i) {
    RGP_CHECK_SHAPE(masks[i].height == labels[i].height &&
                        masks[i].width == labels[i].width &&
                        masks[i].num_classes == logits.dim(1),
                    "label_relaxation_loss: mask ", i,
                    " does not match labels/logits geometry");
  }
  LossOptions opts;
  opts.mode = LossMode::kCeRelax;
  return segmentation_loss_impl(logits, labels, opts,
                                std::vector<BorderMask>(masks.begin(), masks.end()));
}

}  // namespace rgp
