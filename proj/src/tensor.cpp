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
#include "rgp/tensor.hpp"

#include <cmath>
#include <sstream>

namespace rgp {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    RGP_CHECK_SHAPE(d > 0, "tensor dimension must be positive, got ", d,
                    " in shape ", shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto impl = std::make_shared<TensorData>();
  int64_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->values.assign(static_cast<size_t>(n), 0.0f);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
  return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<float> values,
                           bool requires_grad) {
  int64_t n = shape_numel(shape);
  RGP_CHECK_SHAPE(n == static_cast<int64_t>(values.size()),
                  "value count ", values.size(), " does not match shape ",
                  shape_str(shape), " (", n, " elements)");
  auto impl = std::make_shared<TensorData>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

float* Tensor::grad_data() {
  ensure_grad();
  return impl_->grad.data();
}

void Tensor::ensure_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0f);
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
  RGP_CHECK_SHAPE(numel() == 1, "item() requires a one-element tensor, shape is ",
                  shape_str(impl_->shape));
  return impl_->values[0];
}

int64_t Tensor::flat_index(std::initializer_list<int> idx) const {
  RGP_CHECK_SHAPE(idx.size() == impl_->shape.size(), "index rank ", idx.size(),
                  " does not match tensor rank ", impl_->shape.size());
  int64_t flat = 0;
  size_t i = 0;
  for (int v : idx) {
    int d = impl_->shape[i];
    RGP_CHECK_SHAPE(v >= 0 && v < d, "index ", v, " out of range for dim ", i,
                    " of extent ", d);
    flat = flat * d + v;
    ++i;
  }
  return flat;
}

float Tensor::at(std::initializer_list<int> idx) const {
  return impl_->values[static_cast<size_t>(flat_index(idx))];
}

float& Tensor::at(std::initializer_list<int> idx) {
  return impl_->values[static_cast<size_t>(flat_index(idx))];
}

float Tensor::grad_at(std::initializer_list<int> idx) const {
  RGP_CHECK(has_grad(), "tensor has no gradient buffer");
  return impl_->grad[static_cast<size_t>(flat_index(idx))];
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorData>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

bool Tensor::all_finite() const {
  for (float v : impl_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace rgp
