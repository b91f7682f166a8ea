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
#ifndef RGP_OPS_HPP_
#define RGP_OPS_HPP_

#include "rgp/autograd.hpp"
#include "rgp/rng.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// Convolution / deconvolution parameters. weight is [out_ch, in_ch, kH, kW];
/// bias, when present, is [out_ch].
struct ConvParams {
  Tensor weight;
  Tensor bias;  // undefined when absent
  int stride = 1;
  int padding = 0;

  int out_channels() const { return weight.dim(0); }
  int in_channels() const { return weight.dim(1); }
  int kh() const { return weight.dim(2); }
  int kw() const { return weight.dim(3); }
  bool has_bias() const { return bias.defined(); }

  /// Kaiming fan-in normal weight init (std = gain * sqrt(2/fan_in)), zero
  /// bias. Auxiliary residual-style branches pass gain < 1 so their initial
  /// contribution stays small.
  static ConvParams make(int out_ch, int in_ch, int kh, int kw, int stride,
                         int padding, bool with_bias, Pcg32& rng,
                         double gain = 1.0);

  /// Stride-2 transposed convolution doubling the spatial size. Only
  /// kernel 2 / pad 0 and kernel 4 / pad 1 double exactly; anything else is
  /// rejected here, at construction time.
  static ConvParams make_deconv2x(int out_ch, int in_ch, int kernel,
                                  bool with_bias, Pcg32& rng);
};

struct BatchNormState {
  Tensor gamma;         // [C], trainable
  Tensor beta;          // [C], trainable
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  float momentum = 0.1f;
  float epsilon = 1e-5f;
  bool training_mode = false;

  int channels() const { return gamma.dim(0); }

  static BatchNormState make(int channels, float momentum = 0.1f,
                             float epsilon = 1e-5f);
};

/// 2-D convolution, x [N,Cin,H,W] -> [N,Cout,H',W'] with
/// H' = floor((H + 2p - kH)/stride) + 1.
Tensor conv2d(const Tensor& x, const ConvParams& p);

/// Stride-2 transposed convolution, x [N,Cin,H,W] -> [N,Cout,2H,2W].
Tensor deconv2d(const Tensor& x, const ConvParams& p);

/// Batch normalization over N,H,W per channel. Training mode uses batch
/// statistics and updates the running ones; inference mode is a per-channel
/// affine map from the running statistics.
Tensor batchnorm2d(const Tensor& x, BatchNormState& s);

Tensor relu(const Tensor& x);

/// Max pooling. stride == 1 gives the same-size mode (odd k, replication
/// padding) used for one-hot label dilation; stride > 1 pools valid windows
/// only. Gradient goes to the first (row-major) maximal element of a window.
Tensor maxpool2d(const Tensor& x, int k, int stride);

/// Bilinear interpolation with half-pixel centers, differentiable.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

/// Channel softmax per pixel; output channels sum to 1 at every position.
Tensor softmax_channels(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);

/// Flip along the width axis ([N,C,H,W]); differentiable.
Tensor hflip(const Tensor& x);

}  // namespace rgp

#endif  // RGP_OPS_HPP_
