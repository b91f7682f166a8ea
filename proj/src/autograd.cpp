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
#include "rgp/autograd.hpp"

namespace rgp {

namespace {
thread_local GradientTape* g_active_tape = nullptr;
}

GradientTape::GradientTape() : prev_(g_active_tape) { g_active_tape = this; }

GradientTape::~GradientTape() { g_active_tape = prev_; }

GradientTape* GradientTape::active() { return g_active_tape; }

void GradientTape::record(const Tensor& output, std::function<void()> backward_step) {
  nodes_.push_back({output, std::move(backward_step)});
}

void GradientTape::backward(const Tensor& loss) {
  RGP_CHECK_SHAPE(loss.defined() && loss.numel() == 1,
                  "backward() requires a scalar loss, got shape ",
                  loss.defined() ? shape_str(loss.shape()) : "<undefined>");
  // Intermediate gradients are per-sweep state; leaves keep accumulating.
  for (auto& node : nodes_) {
    if (node.output.has_grad()) node.output.zero_grad();
  }
  Tensor seed = loss;
  seed.grad_data()[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    it->backward_step();
}

void backward(const Tensor& loss) {
  GradientTape* tape = GradientTape::active();
  RGP_CHECK(tape != nullptr, "backward() called with no active gradient tape");
  tape->backward(loss);
}

}  // namespace rgp
