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
#ifndef RGP_AUTOGRAD_HPP_
#define RGP_AUTOGRAD_HPP_

#include <functional>
#include <vector>

#include "rgp/tensor.hpp"

namespace rgp {

/// Reverse-mode tape. Constructing one installs it as the active tape for the
/// current thread (ops record their backward rules on it); destruction
/// restores the previous tape. The reverse sweep visits nodes in exact reverse
/// order of the forward pass, which is reverse topological order by
/// construction.
class GradientTape {
 public:
  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* active();

  /// Registers one op: the tensor it produced plus its backward rule.
  void record(const Tensor& output, std::function<void()> backward_step);

  /// Seeds d(loss)/d(loss)=1 and runs the reverse sweep. loss must be a
  /// scalar produced under this tape. Recorded (intermediate) gradients are
  /// reset per sweep; leaf gradients accumulate, so repeated calls without
  /// zeroing add up.
  void backward(const Tensor& loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor output;
    std::function<void()> backward_step;
  };
  std::vector<Node> nodes_;
  GradientTape* prev_ = nullptr;
};

inline bool grad_recording() { return GradientTape::active() != nullptr; }

/// Backward through the active tape; errors when no tape is active or the
/// loss is not scalar.
void backward(const Tensor& loss);

}  // namespace rgp

#endif  // RGP_AUTOGRAD_HPP_
