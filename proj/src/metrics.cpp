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
#include "rgp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rgp/common.hpp"
#include "rgp/ops.hpp"

namespace rgp {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t v : counts) t += v;
  return t;
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
  RGP_CHECK_SHAPE(pred.height == gt.height && pred.width == gt.width,
                  "confusion: prediction is ", pred.height, "x", pred.width,
                  " but ground truth is ", gt.height, "x", gt.width);
  for (int64_t j = 0; j < gt.size(); ++j) {
    const uint8_t g = gt.labels[static_cast<size_t>(j)];
    if (g == kIgnoreLabel) continue;
    const uint8_t p = pred.labels[static_cast<size_t>(j)];
    RGP_CHECK(p != kIgnoreLabel, "confusion: prediction contains the ignore label");
    RGP_CHECK(g < num_classes && p < num_classes,
              "confusion: label out of range (gt=", static_cast<int>(g),
              " pred=", static_cast<int>(p), " classes=", num_classes, ")");
    ++at(g, p);
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  RGP_CHECK(num_classes == other.num_classes, "confusion: class count mismatch");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) {
  RGP_CHECK(cm.total() > 0, "metrics: confusion matrix is empty");
  std::vector<std::optional<double>> iou(static_cast<size_t>(cm.num_classes));
  for (int c = 0; c < cm.num_classes; ++c) {
    int64_t tp = cm.at(c, c);
    int64_t fn = 0, fp = 0;
    for (int o = 0; o < cm.num_classes; ++o) {
      if (o == c) continue;
      fn += cm.at(c, o);
      fp += cm.at(o, c);
    }
    const int64_t denom = tp + fp + fn;
    if (denom == 0) continue;  // absent from gt and pred: excluded
    iou[static_cast<size_t>(c)] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  return iou;
}

double miou(const ConfusionMatrix& cm) {
  const auto iou = per_class_iou(cm);
  double acc = 0.0;
  int present = 0;
  for (const auto& v : iou) {
    if (v.has_value()) {
      acc += *v;
      ++present;
    }
  }
  RGP_CHECK(present > 0, "metrics: no classes present");
  return acc / present;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  const int64_t t = cm.total();
  RGP_CHECK(t > 0, "metrics: confusion matrix is empty");
  int64_t diag = 0;
  for (int c = 0; c < cm.num_classes; ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(t);
}

Tensor entropy_map(const Tensor& logits) {
  RGP_CHECK_SHAPE(logits.ndim() == 4, "entropy_map: expected [N,C,H,W], got ",
                  shape_str(logits.shape()));
  Tensor probs = softmax_channels(logits);
  const int n = logits.dim(0), c = logits.dim(1);
  const int64_t hw = static_cast<int64_t>(logits.dim(2)) * logits.dim(3);
  Tensor out = Tensor::zeros({n, logits.dim(2), logits.dim(3)});
  const float* pv = probs.data();
  float* od = out.data();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < hw; ++j) {
      double h = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const float p = pv[(i * c + ch) * hw + j];
        if (p > 0.0f) h -= p * std::log(p);
      }
      od[i * hw + j] = static_cast<float>(std::max(h, 0.0));
    }
  }
  return out;
}

Tensor entropy_diff(const Tensor& logits_a, const Tensor& logits_b) {
  RGP_CHECK_SHAPE(logits_a.shape() == logits_b.shape(),
                  "entropy_diff: shape mismatch ", shape_str(logits_a.shape()),
                  " vs ", shape_str(logits_b.shape()));
  Tensor ha = entropy_map(logits_a);
  Tensor hb = entropy_map(logits_b);
  Tensor out = Tensor::zeros(ha.shape());
  const float* a = ha.data();
  const float* b = hb.data();
  float* o = out.data();
  for (int64_t i = 0; i < ha.numel(); ++i) o[i] = a[i] - b[i];
  return out;
}

LabelMap argmax_labels(const Tensor& logits, int n) {
  RGP_CHECK_SHAPE(logits.ndim() == 4, "argmax_labels: expected [N,C,H,W], got ",
                  shape_str(logits.shape()));
  RGP_CHECK(n >= 0 && n < logits.dim(0), "argmax_labels: image index ", n,
            " out of range");
  const int c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  const float* d = logits.data() + static_cast<int64_t>(n) * c * hw;
  LabelMap lm(h, w);
  for (int64_t j = 0; j < hw; ++j) {
    int best = 0;
    float best_v = d[j];
    for (int ch = 1; ch < c; ++ch) {
      const float v = d[ch * hw + j];
      if (v > best_v) {
        best_v = v;
        best = ch;
      }
    }
    lm.labels[static_cast<size_t>(j)] = static_cast<uint8_t>(best);
  }
  return lm;
}

namespace {
int snap_to_multiple(double v, int multiple) {
  const int snapped =
      static_cast<int>(std::lround(v / multiple)) * multiple;
  return std::max(multiple, snapped);
}
}  // namespace

Tensor multi_scale_eval(const std::function<Tensor(const Tensor&)>& forward_fn,
                        const Tensor& image, const std::vector<double>& scales,
                        bool flip, int size_multiple) {
  RGP_CHECK(!scales.empty(), "multi_scale_eval: scale list is empty");
  RGP_CHECK_SHAPE(image.ndim() == 4, "multi_scale_eval: expected [N,C,H,W], got ",
                  shape_str(image.shape()));
  const int h = image.dim(2), w = image.dim(3);
  Tensor acc;
  int passes = 0;
  auto add_pass = [&](const Tensor& input, bool mirrored) {
    Tensor in = mirrored ? hflip(input) : input;
    Tensor probs = softmax_channels(forward_fn(in));
    if (mirrored) probs = hflip(probs);
    if (probs.dim(2) != h || probs.dim(3) != w)
      probs = bilinear_resize(probs, h, w);
    acc = acc.defined() ? add(acc, probs) : probs;
    ++passes;
  };
  for (double s : scales) {
    RGP_CHECK(s > 0.0, "multi_scale_eval: scale must be positive, got ", s);
    Tensor scaled = image;
    const int sh = snap_to_multiple(h * s, size_multiple);
    const int sw = snap_to_multiple(w * s, size_multiple);
    if (sh != h || sw != w) scaled = bilinear_resize(image, sh, sw);
    add_pass(scaled, false);
    if (flip) add_pass(scaled, true);
  }
  // Mean of softmax outputs; a convex combination, so per-pixel channel sums
  // stay 1.
  Tensor out = Tensor::zeros(acc.shape());
  const float inv = 1.0f / static_cast<float>(passes);
  const float* a = acc.data();
  float* o = out.data();
  for (int64_t i = 0; i < acc.numel(); ++i) o[i] = a[i] * inv;
  return out;
}

}  // namespace rgp
