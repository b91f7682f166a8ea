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
#include <cmath>
#include <cstring>
#include <vector>

#include "gemm.hpp"
#include "rgp/common.hpp"
#include "rgp/ops.hpp"

namespace rgp {

namespace {

void check_nchw(const Tensor& x, const char* op) {
  RGP_CHECK_SHAPE(x.defined() && x.ndim() == 4, op,
                  ": expected a 4-D [N,C,H,W] input, got ",
                  x.defined() ? shape_str(x.shape()) : "<undefined>");
}

// col is [Cin*kh*kw, OH*OW]; out-of-range taps read as zero.
void im2col(const float* x, int ci, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, float* col) {
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  for (int c = 0; c < ci; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v) {
        float* dst = col + (((static_cast<int64_t>(c) * kh) + u) * kw + v) * ohw;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * stride - pad + u;
          float* row = dst + static_cast<int64_t>(y) * ow;
          if (iy < 0 || iy >= h) {
            std::memset(row, 0, sizeof(float) * static_cast<size_t>(ow));
            continue;
          }
          const float* src = x + (static_cast<int64_t>(c) * h + iy) * w;
          for (int xo = 0; xo < ow; ++xo) {
            const int ix = xo * stride - pad + v;
            row[xo] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Scatter-add of a column buffer back into the input gradient.
void col2im_acc(const float* col, int ci, int h, int w, int kh, int kw,
                int stride, int pad, int oh, int ow, float* dx) {
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  for (int c = 0; c < ci; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v) {
        const float* src = col + (((static_cast<int64_t>(c) * kh) + u) * kw + v) * ohw;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * stride - pad + u;
          if (iy < 0 || iy >= h) continue;
          float* dst = dx + (static_cast<int64_t>(c) * h + iy) * w;
          const float* s = src + static_cast<int64_t>(y) * ow;
          for (int xo = 0; xo < ow; ++xo) {
            const int ix = xo * stride - pad + v;
            if (ix >= 0 && ix < w) dst[ix] += s[xo];
          }
        }
      }
    }
  }
}

}  // namespace

ConvParams ConvParams::make(int out_ch, int in_ch, int kh, int kw, int stride,
                            int padding, bool with_bias, Pcg32& rng,
                            double gain) {
  RGP_CHECK(out_ch >= 1 && in_ch >= 1, "conv: channel counts must be >= 1, got out=",
            out_ch, " in=", in_ch);
  RGP_CHECK(kh >= 1 && kw >= 1, "conv: kernel dims must be >= 1, got ", kh, "x", kw);
  RGP_CHECK(stride >= 1, "conv: stride must be >= 1, got ", stride);
  RGP_CHECK(padding >= 0, "conv: padding must be >= 0, got ", padding);
  RGP_CHECK(gain > 0.0, "conv: init gain must be positive, got ", gain);
  ConvParams p;
  p.stride = stride;
  p.padding = padding;
  p.weight = Tensor::zeros({out_ch, in_ch, kh, kw}, /*requires_grad=*/true);
  const double std_dev =
      gain * std::sqrt(2.0 / (static_cast<double>(in_ch) * kh * kw));
  float* w = p.weight.data();
  for (int64_t i = 0; i < p.weight.numel(); ++i)
    w[i] = static_cast<float>(rng.next_normal() * std_dev);
  if (with_bias) p.bias = Tensor::zeros({out_ch}, /*requires_grad=*/true);
  return p;
}

ConvParams ConvParams::make_deconv2x(int out_ch, int in_ch, int kernel,
                                     bool with_bias, Pcg32& rng) {
  // Output size is stride*(H-1) + k - 2p; doubling needs k - 2p == 2.
  int padding;
  if (kernel == 2) {
    padding = 0;
  } else if (kernel == 4) {
    padding = 1;
  } else {
    throw ValueError(detail::format_msg(
        "deconv2d: kernel ", kernel,
        " cannot double the spatial size exactly (use 2 or 4)"));
  }
  ConvParams p = make(out_ch, in_ch, kernel, kernel, /*stride=*/2, padding,
                      with_bias, rng);
  return p;
}

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  check_nchw(x, "conv2d");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = p.out_channels(), kh = p.kh(), kw = p.kw();
  const int stride = p.stride, pad = p.padding;
  RGP_CHECK_SHAPE(ci == p.in_channels(), "conv2d: input channels (", ci,
                  ") do not match weight in_channels (", p.in_channels(), ")");
  RGP_CHECK_SHAPE(h + 2 * pad >= kh, "conv2d: padded height ", h + 2 * pad,
                  " smaller than kernel height ", kh);
  RGP_CHECK_SHAPE(w + 2 * pad >= kw, "conv2d: padded width ", w + 2 * pad,
                  " smaller than kernel width ", kw);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  const int64_t k_dim = static_cast<int64_t>(ci) * kh * kw;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;

  Tensor out = Tensor::zeros({n, co, oh, ow});
  const float* xd = x.data();
  const float* wd = p.weight.data();
  const float* bd = p.has_bias() ? p.bias.data() : nullptr;
  float* od = out.data();
  const int64_t in_img = static_cast<int64_t>(ci) * h * w;
  const int64_t out_img = static_cast<int64_t>(co) * ohw;

  parallel_for(n, [&](int64_t begin, int64_t end) {
    std::vector<float> col(static_cast<size_t>(k_dim * ohw));
    for (int64_t i = begin; i < end; ++i) {
      im2col(xd + i * in_img, ci, h, w, kh, kw, stride, pad, oh, ow, col.data());
      float* o = od + i * out_img;
      if (bd) {
        for (int c = 0; c < co; ++c)
          for (int64_t j = 0; j < ohw; ++j) o[c * ohw + j] = bd[c];
      }
      detail::gemm_acc(wd, col.data(), o, co, k_dim, ohw);
    }
  });

  GradientTape* tape = GradientTape::active();
  const bool needs_grad =
      tape && (x.requires_grad() || p.weight.requires_grad() ||
               (p.has_bias() && p.bias.requires_grad()));
  if (needs_grad) {
    out.set_requires_grad(true);
    Tensor xc = x, wc = p.weight, bc = p.bias, oc = out;
    tape->record(out, [xc, wc, bc, oc, n, ci, h, w, co, kh, kw, stride, pad, oh,
                  ow, k_dim, ohw, in_img, out_img]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      const float* xv = xc.data();
      const float* wv = wc.data();
      float* dw = wc.requires_grad() ? wc.grad_data() : nullptr;
      float* db = (bc.defined() && bc.requires_grad()) ? bc.grad_data() : nullptr;
      float* dx = xc.requires_grad() ? xc.grad_data() : nullptr;
      std::vector<float> col(static_cast<size_t>(k_dim * ohw));
      std::vector<float> dcol;
      if (dx) dcol.resize(static_cast<size_t>(k_dim * ohw));
      for (int64_t i = 0; i < n; ++i) {
        const float* dyi = dy + i * out_img;
        if (db) {
          for (int c = 0; c < co; ++c) {
            float acc = 0.0f;
            for (int64_t j = 0; j < ohw; ++j) acc += dyi[c * ohw + j];
            db[c] += acc;
          }
        }
        if (dw) {
          im2col(xv + i * in_img, ci, h, w, kh, kw, stride, pad, oh, ow,
                 col.data());
          detail::gemm_nt_acc(dyi, col.data(), dw, co, ohw, k_dim);
        }
        if (dx) {
          std::fill(dcol.begin(), dcol.end(), 0.0f);
          detail::gemm_tn_acc(wv, dyi, dcol.data(), co, k_dim, ohw);
          col2im_acc(dcol.data(), ci, h, w, kh, kw, stride, pad, oh, ow,
                     dx + i * in_img);
        }
      }
    });
  }
  return out;
}

Tensor deconv2d(const Tensor& x, const ConvParams& p) {
  check_nchw(x, "deconv2d");
  RGP_CHECK(p.stride == 2, "deconv2d: stride must be 2, got ", p.stride);
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = p.out_channels(), k = p.kh(), pad = p.padding;
  RGP_CHECK_SHAPE(p.kh() == p.kw(), "deconv2d: kernel must be square, got ",
                  p.kh(), "x", p.kw());
  RGP_CHECK_SHAPE(ci == p.in_channels(), "deconv2d: input channels (", ci,
                  ") do not match weight in_channels (", p.in_channels(), ")");
  RGP_CHECK(k - 2 * pad == 2, "deconv2d: kernel ", k, " with padding ", pad,
            " does not double the spatial size exactly");
  const int oh = 2 * h, ow = 2 * w;
  Tensor out = Tensor::zeros({n, co, oh, ow});
  const float* xd = x.data();
  const float* wd = p.weight.data();
  const int64_t in_img = static_cast<int64_t>(ci) * h * w;
  const int64_t out_img = static_cast<int64_t>(co) * oh * ow;
  float* od = out.data();

  // Scatter each input pixel into its k x k output footprint. Writes are
  // disjoint per (image, output channel) pair.
  const int64_t tasks = static_cast<int64_t>(n) * co;
  parallel_for(tasks, [&](int64_t begin, int64_t end) {
    for (int64_t t = begin; t < end; ++t) {
      const int64_t i = t / co;
      const int c = static_cast<int>(t % co);
      float* oplane = od + i * out_img + static_cast<int64_t>(c) * oh * ow;
      if (p.has_bias()) {
        const float b = p.bias.data()[c];
        for (int64_t j = 0; j < static_cast<int64_t>(oh) * ow; ++j) oplane[j] = b;
      }
      for (int ic = 0; ic < ci; ++ic) {
        const float* xplane = xd + i * in_img + static_cast<int64_t>(ic) * h * w;
        const float* wk = wd + (static_cast<int64_t>(c) * ci + ic) * k * k;
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const float v = xplane[y * w + xx];
            if (v == 0.0f) continue;
            for (int u = 0; u < k; ++u) {
              const int ty = 2 * y + u - pad;
              if (ty < 0 || ty >= oh) continue;
              for (int vv = 0; vv < k; ++vv) {
                const int tx = 2 * xx + vv - pad;
                if (tx < 0 || tx >= ow) continue;
                oplane[ty * ow + tx] += wk[u * k + vv] * v;
              }
            }
          }
        }
      }
    }
  });

  GradientTape* tape = GradientTape::active();
  const bool needs_grad =
      tape && (x.requires_grad() || p.weight.requires_grad() ||
               (p.has_bias() && p.bias.requires_grad()));
  if (needs_grad) {
    out.set_requires_grad(true);
    Tensor xc = x, wc = p.weight, bc = p.bias, oc = out;
    const int kk = k, padk = pad;
    tape->record(out, [xc, wc, bc, oc, n, ci, h, w, co, kk, padk, oh, ow, in_img,
                  out_img]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      const float* xv = xc.data();
      const float* wv = wc.data();
      float* dw = wc.requires_grad() ? wc.grad_data() : nullptr;
      float* db = (bc.defined() && bc.requires_grad()) ? bc.grad_data() : nullptr;
      float* dx = xc.requires_grad() ? xc.grad_data() : nullptr;
      for (int64_t i = 0; i < n; ++i) {
        for (int c = 0; c < co; ++c) {
          const float* dplane = dy + i * out_img + static_cast<int64_t>(c) * oh * ow;
          if (db) {
            float acc = 0.0f;
            for (int64_t j = 0; j < static_cast<int64_t>(oh) * ow; ++j)
              acc += dplane[j];
            db[c] += acc;
          }
          for (int ic = 0; ic < ci; ++ic) {
            const float* xplane = xv + i * in_img + static_cast<int64_t>(ic) * h * w;
            const float* wk = wv + (static_cast<int64_t>(c) * ci + ic) * kk * kk;
            float* dwk = dw ? dw + (static_cast<int64_t>(c) * ci + ic) * kk * kk
                            : nullptr;
            float* dxplane =
                dx ? dx + i * in_img + static_cast<int64_t>(ic) * h * w : nullptr;
            for (int y = 0; y < h; ++y) {
              for (int xx = 0; xx < w; ++xx) {
                const float v = xplane[y * w + xx];
                float accx = 0.0f;
                for (int u = 0; u < kk; ++u) {
                  const int ty = 2 * y + u - padk;
                  if (ty < 0 || ty >= oh) continue;
                  for (int vv = 0; vv < kk; ++vv) {
                    const int tx = 2 * xx + vv - padk;
                    if (tx < 0 || tx >= ow) continue;
                    const float g = dplane[ty * ow + tx];
                    if (dwk) dwk[u * kk + vv] += v * g;
                    accx += wk[u * kk + vv] * g;
                  }
                }
                if (dxplane) dxplane[y * w + xx] += accx;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace rgp
