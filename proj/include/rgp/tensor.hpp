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
#ifndef RGP_TENSOR_HPP_
#define RGP_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

#include "rgp/common.hpp"

namespace rgp {

struct TensorData {
  std::vector<int> shape;
  std::vector<float> values;
  std::vector<float> grad;  // empty until first touched
  bool requires_grad = false;
};

/// Dense row-major fp32 array with an optional gradient buffer. Tensor is a
/// cheap handle: copies share storage. Values are treated as immutable once an
/// op has produced them; parameter updates happen between steps only.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float value, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<float> values,
                            bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->values.size()); }

  float* data() { return impl_->values.data(); }
  const float* data() const { return impl_->values.data(); }
  std::vector<float>& values() { return impl_->values; }
  const std::vector<float>& values() const { return impl_->values; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    impl_->requires_grad = rg;
    return *this;
  }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  /// Allocates (zero-filled) on first use.
  float* grad_data();
  const std::vector<float>& grad() const { return impl_->grad; }
  void ensure_grad();
  void zero_grad();

  /// Value of a one-element tensor.
  float item() const;

  /// Row-major multi-index accessors; bounds-checked. Test and glue
  /// convenience, not for kernel inner loops.
  float at(std::initializer_list<int> idx) const;
  float& at(std::initializer_list<int> idx);
  float grad_at(std::initializer_list<int> idx) const;

  /// Deep copy of values (fresh storage, no grad buffer).
  Tensor clone() const;

  bool all_finite() const;

  const std::shared_ptr<TensorData>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> impl) : impl_(std::move(impl)) {}
  int64_t flat_index(std::initializer_list<int> idx) const;

  std::shared_ptr<TensorData> impl_;
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace rgp

#endif  // RGP_TENSOR_HPP_
