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
#include <vector>

#include "rgp/common.hpp"
#include "rgp/ops.hpp"

namespace rgp {

BatchNormState BatchNormState::make(int channels, float momentum, float epsilon) {
  RGP_CHECK(channels >= 1, "batchnorm: channels must be >= 1, got ", channels);
  RGP_CHECK(momentum > 0.0f && momentum < 1.0f, "batchnorm: momentum must be in (0,1), got ",
            momentum);
  RGP_CHECK(epsilon >= 0.0f, "batchnorm: epsilon must be >= 0, got ", epsilon);
  BatchNormState s;
  s.gamma = Tensor::full({channels}, 1.0f, /*requires_grad=*/true);
  s.beta = Tensor::zeros({channels}, /*requires_grad=*/true);
  s.running_mean = Tensor::zeros({channels});
  s.running_var = Tensor::full({channels}, 1.0f);
  s.momentum = momentum;
  s.epsilon = epsilon;
  return s;
}

Tensor batchnorm2d(const Tensor& x, BatchNormState& s) {
  RGP_CHECK_SHAPE(x.defined() && x.ndim() == 4,
                  "batchnorm2d: expected [N,C,H,W] input, got ",
                  x.defined() ? shape_str(x.shape()) : "<undefined>");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  RGP_CHECK_SHAPE(c == s.channels(), "batchnorm2d: input channels (", c,
                  ") do not match state channels (", s.channels(), ")");
  const int64_t cnt = static_cast<int64_t>(n) * h * w;
  const int64_t hw = static_cast<int64_t>(h) * w;
  const int64_t img = static_cast<int64_t>(c) * hw;

  Tensor out = Tensor::zeros({n, c, h, w});
  const float* xd = x.data();
  float* od = out.data();
  const float* gamma = s.gamma.data();
  const float* beta = s.beta.data();

  std::vector<float> mean(static_cast<size_t>(c));
  std::vector<float> inv_std(static_cast<size_t>(c));

  if (s.training_mode) {
    RGP_CHECK(cnt > 1,
              "batchnorm2d: training mode needs more than one value per "
              "channel (N*H*W = 1 has undefined variance)");
    float* rm = s.running_mean.data();
    float* rv = s.running_var.data();
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const float* p = xd + i * img + ch * hw;
        for (int64_t j = 0; j < hw; ++j) acc += p[j];
      }
      const double m = acc / static_cast<double>(cnt);
      double vacc = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const float* p = xd + i * img + ch * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double d = p[j] - m;
          vacc += d * d;
        }
      }
      const double var = vacc / static_cast<double>(cnt);  // biased, for normalization
      const double var_unbiased = vacc / static_cast<double>(cnt - 1);
      mean[ch] = static_cast<float>(m);
      inv_std[ch] = static_cast<float>(1.0 / std::sqrt(var + s.epsilon));
      rm[ch] = static_cast<float>((1.0 - s.momentum) * rm[ch] + s.momentum * m);
      rv[ch] = static_cast<float>((1.0 - s.momentum) * rv[ch] + s.momentum * var_unbiased);
    }
  } else {
    const float* rm = s.running_mean.data();
    const float* rv = s.running_var.data();
    for (int ch = 0; ch < c; ++ch) {
      RGP_CHECK(rv[ch] + s.epsilon > 0.0f,
                "batchnorm2d: running_var + epsilon must be positive at channel ", ch);
      mean[ch] = rm[ch];
      inv_std[ch] = 1.0f / std::sqrt(rv[ch] + s.epsilon);
    }
  }

  for (int64_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const float* p = xd + i * img + ch * hw;
      float* o = od + i * img + ch * hw;
      const float m = mean[ch], is = inv_std[ch], g = gamma[ch], b = beta[ch];
      for (int64_t j = 0; j < hw; ++j) o[j] = (p[j] - m) * is * g + b;
    }
  }

  GradientTape* tape = GradientTape::active();
  const bool needs_grad = tape && (x.requires_grad() || s.gamma.requires_grad() ||
                                   s.beta.requires_grad());
  if (needs_grad) {
    out.set_requires_grad(true);
    Tensor xc = x, gc = s.gamma, bc = s.beta, oc = out;
    const bool training = s.training_mode;
    tape->record(out, [xc, gc, bc, oc, mean, inv_std, n, c, hw, img, cnt,
                  training]() mutable {
      if (!oc.has_grad()) return;
      const float* dy = oc.grad().data();
      const float* xv = xc.data();
      const float* gamma_v = gc.data();
      float* dgamma = gc.requires_grad() ? gc.grad_data() : nullptr;
      float* dbeta = bc.requires_grad() ? bc.grad_data() : nullptr;
      float* dx = xc.requires_grad() ? xc.grad_data() : nullptr;
      for (int ch = 0; ch < c; ++ch) {
        const float m = mean[ch], is = inv_std[ch];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int64_t i = 0; i < n; ++i) {
          const float* p = xv + i * img + ch * hw;
          const float* g = dy + i * img + ch * hw;
          for (int64_t j = 0; j < hw; ++j) {
            sum_dy += g[j];
            sum_dy_xhat += g[j] * (p[j] - m) * is;
          }
        }
        if (dbeta) dbeta[ch] += static_cast<float>(sum_dy);
        if (dgamma) dgamma[ch] += static_cast<float>(sum_dy_xhat);
        if (dx) {
          const float gm = gamma_v[ch];
          if (training) {
            // dx = gamma*is/cnt * (cnt*dy - sum_dy - xhat*sum_dy_xhat)
            const float k = gm * is / static_cast<float>(cnt);
            const float sdy = static_cast<float>(sum_dy);
            const float sdyx = static_cast<float>(sum_dy_xhat);
            for (int64_t i = 0; i < n; ++i) {
              const float* p = xv + i * img + ch * hw;
              const float* g = dy + i * img + ch * hw;
              float* d = dx + i * img + ch * hw;
              for (int64_t j = 0; j < hw; ++j) {
                const float xhat = (p[j] - m) * is;
                d[j] += k * (static_cast<float>(cnt) * g[j] - sdy - xhat * sdyx);
              }
            }
          } else {
            const float k = gm * is;
            for (int64_t i = 0; i < n; ++i) {
              const float* g = dy + i * img + ch * hw;
              float* d = dx + i * img + ch * hw;
              for (int64_t j = 0; j < hw; ++j) d[j] += k * g[j];
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace rgp
