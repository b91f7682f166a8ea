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
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rgp/common.hpp"
#include "rgp/ops.hpp"

namespace rgp {

namespace {
void check_nchw(const Tensor& x, const char* op) {
  RGP_CHECK_SHAPE(x.defined() && x.ndim() == 4, op,
                  ": expected a 4-D [N,C,H,W] input, got ",
                  x.defined() ? shape_str(x.shape()) : "<undefined>");
}
}  // namespace

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) od[i] = xd[i] > 0.0f ? xd[i] : 0.0f;

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape->record(out, [xc, oc, n]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      const float* xv = xc.data();
      float* dx = xc.grad_data();
      // Subgradient at exactly 0 is taken as 0.
      for (int64_t i = 0; i < n; ++i)
        if (xv[i] > 0.0f) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor maxpool2d(const Tensor& x, int k, int stride) {
  check_nchw(x, "maxpool2d");
  RGP_CHECK(k >= 1 && stride >= 1, "maxpool2d: k and stride must be >= 1, got k=",
            k, " stride=", stride);
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int oh, ow, pad;
  if (stride == 1) {
    // Same-size mode: odd window, replication padding.
    RGP_CHECK(k % 2 == 1, "maxpool2d: stride-1 same-size mode needs an odd window, got ",
              k);
    pad = (k - 1) / 2;
    oh = h;
    ow = w;
  } else {
    pad = 0;
    RGP_CHECK_SHAPE(k <= h, "maxpool2d: window ", k, " exceeds input height ", h);
    RGP_CHECK_SHAPE(k <= w, "maxpool2d: window ", k, " exceeds input width ", w);
    oh = (h - k) / stride + 1;
    ow = (w - k) / stride + 1;
  }

  Tensor out = Tensor::zeros({n, c, oh, ow});
  std::vector<int32_t> argmax(static_cast<size_t>(out.numel()));
  const float* xd = x.data();
  float* od = out.data();
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  const int64_t planes = static_cast<int64_t>(n) * c;
  for (int64_t pl = 0; pl < planes; ++pl) {
    const float* plane = xd + pl * hw;
    float* o = od + pl * ohw;
    int32_t* am = argmax.data() + pl * ohw;
    for (int y = 0; y < oh; ++y) {
      for (int xo = 0; xo < ow; ++xo) {
        float best = -std::numeric_limits<float>::infinity();
        int32_t best_idx = -1;
        for (int u = 0; u < k; ++u) {
          int iy = y * stride - pad + u;
          iy = std::clamp(iy, 0, h - 1);
          for (int v = 0; v < k; ++v) {
            int ix = xo * stride - pad + v;
            ix = std::clamp(ix, 0, w - 1);
            const float val = plane[iy * w + ix];
            if (val > best) {
              best = val;
              best_idx = static_cast<int32_t>(iy * w + ix);
            }
          }
        }
        o[y * ow + xo] = best;
        am[y * ow + xo] = best_idx;
      }
    }
  }

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    auto am = std::make_shared<std::vector<int32_t>>(std::move(argmax));
    tape->record(out, [xc, oc, am, planes, hw, ohw]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      float* dx = xc.grad_data();
      const int32_t* amv = am->data();
      for (int64_t p = 0; p < planes; ++p) {
        const float* g = dy + p * ohw;
        float* d = dx + p * hw;
        const int32_t* a = amv + p * ohw;
        for (int64_t j = 0; j < ohw; ++j) d[a[j]] += g[j];
      }
    });
  }
  return out;
}

namespace {
struct LerpWeights {
  int lo, hi;
  float w_lo, w_hi;
};

// Half-pixel-center source coordinate, clamped at the borders.
std::vector<LerpWeights> make_lerp(int in_size, int out_size) {
  std::vector<LerpWeights> ws(static_cast<size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    double fl = std::floor(src);
    int lo = static_cast<int>(fl);
    if (lo > in_size - 1) lo = in_size - 1;
    int hi = std::min(lo + 1, in_size - 1);
    float frac = static_cast<float>(src - fl);
    if (lo == hi) frac = 0.0f;
    ws[static_cast<size_t>(i)] = {lo, hi, 1.0f - frac, frac};
  }
  return ws;
}
}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  check_nchw(x, "bilinear_resize");
  RGP_CHECK(out_h >= 1 && out_w >= 1, "bilinear_resize: output size must be >= 1, got ",
            out_h, "x", out_w);
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto wy = make_lerp(h, out_h);
  const auto wx = make_lerp(w, out_w);
  Tensor out = Tensor::zeros({n, c, out_h, out_w});
  const float* xd = x.data();
  float* od = out.data();
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t ohw = static_cast<int64_t>(out_h) * out_w;
  const int64_t planes = static_cast<int64_t>(n) * c;
  for (int64_t p = 0; p < planes; ++p) {
    const float* plane = xd + p * hw;
    float* o = od + p * ohw;
    for (int y = 0; y < out_h; ++y) {
      const auto& ly = wy[static_cast<size_t>(y)];
      const float* r0 = plane + static_cast<int64_t>(ly.lo) * w;
      const float* r1 = plane + static_cast<int64_t>(ly.hi) * w;
      float* orow = o + static_cast<int64_t>(y) * out_w;
      for (int xo = 0; xo < out_w; ++xo) {
        const auto& lx = wx[static_cast<size_t>(xo)];
        const float top = r0[lx.lo] * lx.w_lo + r0[lx.hi] * lx.w_hi;
        const float bot = r1[lx.lo] * lx.w_lo + r1[lx.hi] * lx.w_hi;
        orow[xo] = top * ly.w_lo + bot * ly.w_hi;
      }
    }
  }

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape->record(out, [xc, oc, wy, wx, planes, hw, ohw, w, out_h, out_w]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      float* dx = xc.grad_data();
      for (int64_t p = 0; p < planes; ++p) {
        const float* g = dy + p * ohw;
        float* d = dx + p * hw;
        for (int y = 0; y < out_h; ++y) {
          const auto& ly = wy[static_cast<size_t>(y)];
          for (int xo = 0; xo < out_w; ++xo) {
            const auto& lx = wx[static_cast<size_t>(xo)];
            const float gv = g[static_cast<int64_t>(y) * out_w + xo];
            d[static_cast<int64_t>(ly.lo) * w + lx.lo] += gv * ly.w_lo * lx.w_lo;
            d[static_cast<int64_t>(ly.lo) * w + lx.hi] += gv * ly.w_lo * lx.w_hi;
            d[static_cast<int64_t>(ly.hi) * w + lx.lo] += gv * ly.w_hi * lx.w_lo;
            d[static_cast<int64_t>(ly.hi) * w + lx.hi] += gv * ly.w_hi * lx.w_hi;
          }
        }
      }
    });
  }
  return out;
}

Tensor softmax_channels(const Tensor& x) {
  check_nchw(x, "softmax_channels");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = Tensor::zeros(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t img = static_cast<int64_t>(c) * hw;
  for (int64_t i = 0; i < n; ++i) {
    const float* xi = xd + i * img;
    float* oi = od + i * img;
    for (int64_t j = 0; j < hw; ++j) {
      float mx = xi[j];
      for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xi[ch * hw + j]);
      float denom = 0.0f;
      for (int ch = 0; ch < c; ++ch) {
        const float e = std::exp(xi[ch * hw + j] - mx);
        oi[ch * hw + j] = e;
        denom += e;
      }
      const float inv = 1.0f / denom;
      for (int ch = 0; ch < c; ++ch) oi[ch * hw + j] *= inv;
    }
  }

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape->record(out, [xc, oc, n, c, hw, img]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      const float* p = oc.data();
      float* dx = xc.grad_data();
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < hw; ++j) {
          const int64_t base = i * img + j;
          float dot = 0.0f;
          for (int ch = 0; ch < c; ++ch)
            dot += dy[base + ch * hw] * p[base + ch * hw];
          for (int ch = 0; ch < c; ++ch)
            dx[base + ch * hw] += p[base + ch * hw] * (dy[base + ch * hw] - dot);
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  RGP_CHECK_SHAPE(a.shape() == b.shape(), "add: shape mismatch ",
                  shape_str(a.shape()), " vs ", shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const float* av = a.data();
  const float* bv = b.data();
  float* od = out.data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) od[i] = av[i] + bv[i];

  GradientTape* tape = GradientTape::active();
  if (tape && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    tape->record(out, [ac, bc, oc, n]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      if (ac.requires_grad()) {
        float* da = ac.grad_data();
        for (int64_t i = 0; i < n; ++i) da[i] += dy[i];
      }
      if (bc.requires_grad()) {
        float* db = bc.grad_data();
        for (int64_t i = 0; i < n; ++i) db[i] += dy[i];
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  const float* xd = x.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) acc += xd[i];
  Tensor out = Tensor::scalar(static_cast<float>(acc));

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape->record(out, [xc, oc, n]() mutable {
      if (!oc.has_grad()) return;
      const float g = oc.grad()[0];
      float* dx = xc.grad_data();
      for (int64_t i = 0; i < n; ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor hflip(const Tensor& x) {
  check_nchw(x, "hflip");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = Tensor::zeros(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  const int64_t rows = static_cast<int64_t>(n) * c * h;
  for (int64_t r = 0; r < rows; ++r) {
    const float* src = xd + r * w;
    float* dst = od + r * w;
    for (int i = 0; i < w; ++i) dst[i] = src[w - 1 - i];
  }

  GradientTape* tape = GradientTape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape->record(out, [xc, oc, rows, w]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      float* dx = xc.grad_data();
      for (int64_t r = 0; r < rows; ++r) {
        const float* g = dy + r * w;
        float* d = dx + r * w;
        for (int i = 0; i < w; ++i) d[w - 1 - i] += g[i];
      }
    });
  }
  return out;
}

}  // namespace rgp
