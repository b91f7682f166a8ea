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
#ifndef RGP_TESTS_SUPPORT_GRAD_CHECK_HPP_
#define RGP_TESTS_SUPPORT_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rgp/autograd.hpp"
#include "rgp/rng.hpp"
#include "rgp/tensor.hpp"

namespace rgp::testing {

// Central-difference oracle settings. An fp32 forward pass rounds to about
// 6e-8 * |loss|, which the difference quotient amplifies by 1/step, so the
// absolute slack for near-zero gradients scales with the base loss magnitude.
struct FdSettings {
  double step = 1e-3;
  double rel_tol = 1e-2;
  double abs_slack = 5e-4;  // scaled by max(1, |loss|)
  int max_elements = 64;
};

struct FdReport {
  double max_scaled_err = 0.0;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int checked = 0;

  bool ok(const FdSettings& cfg = {}) const { return max_scaled_err <= cfg.rel_tol; }
};

/// Runs one taped backward of loss_builder(), then perturbs sampled elements
/// of `target` and compares analytic against central finite differences. The
/// builder must rebuild the loss from current tensor values on every call.
inline FdReport check_gradients(const std::function<Tensor()>& loss_builder,
                                Tensor target, Pcg32& rng,
                                const FdSettings& cfg = {}) {
  target.set_requires_grad(true);
  target.ensure_grad();
  target.zero_grad();
  double base_loss = 0.0;
  {
    GradientTape tape;
    Tensor loss = loss_builder();
    base_loss = loss.item();
    tape.backward(loss);
  }
  std::vector<float> analytic(target.grad().begin(), target.grad().end());
  const double slack = cfg.abs_slack * std::max(1.0, std::abs(base_loss));

  std::vector<int64_t> indices;
  const int64_t n = target.numel();
  if (n <= cfg.max_elements) {
    for (int64_t i = 0; i < n; ++i) indices.push_back(i);
  } else {
    std::vector<uint8_t> seen(static_cast<size_t>(n), 0);
    while (static_cast<int>(indices.size()) < cfg.max_elements) {
      const int64_t i = rng.next_below(n);
      if (!seen[static_cast<size_t>(i)]) {
        seen[static_cast<size_t>(i)] = 1;
        indices.push_back(i);
      }
    }
  }

  FdReport report;
  float* data = target.data();
  for (int64_t idx : indices) {
    const float saved = data[idx];
    data[idx] = saved + static_cast<float>(cfg.step);
    const double f_plus = loss_builder().item();
    data[idx] = saved - static_cast<float>(cfg.step);
    const double f_minus = loss_builder().item();
    data[idx] = saved;
    const double fd = (f_plus - f_minus) / (2.0 * cfg.step);
    const double a = analytic[static_cast<size_t>(idx)];
    const double diff = std::abs(a - fd);
    double scaled = 0.0;
    if (diff > slack)
      scaled = diff / std::max({std::abs(a), std::abs(fd), 1e-12});
    if (scaled > report.max_scaled_err) {
      report.max_scaled_err = scaled;
      report.worst_index = idx;
      report.worst_analytic = a;
      report.worst_numeric = fd;
    }
    ++report.checked;
  }
  return report;
}

inline Tensor random_tensor(std::vector<int> shape, Pcg32& rng,
                            double scale = 1.0, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (int64_t i = 0; i < t.numel(); ++i)
    t.data()[i] = static_cast<float>(rng.next_normal() * scale);
  return t;
}

}  // namespace rgp::testing

#endif  // RGP_TESTS_SUPPORT_GRAD_CHECK_HPP_
