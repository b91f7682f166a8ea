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
#ifndef RGP_NET_HPP_
#define RGP_NET_HPP_

#include <string>
#include <utility>
#include <vector>

#include "rgp/ops.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// Full structural description of a network instance; enough to rebuild it
/// bit-identically from the same seed.
struct NetworkConfig {
  int num_levels = 4;
  std::vector<int> encoder_channels = {16, 32, 64, 128};
  int reduction_factor = 4;
  int num_classes = 2;
  bool enable_adaptor_downsample = true;
  int encoder_blocks_per_level = 2;
  int deconv_kernel = 2;          // 2 (pad 0) or 4 (pad 1)
  std::string activation = "relu";  // transfer activation: "relu" or "none"

  void validate() const;
  /// Input H and W must be divisible by this (stride of the deepest level).
  int input_multiple() const { return 4 << (num_levels - 1); }
  /// Spatial stride of level s relative to the input: 4, 8, 16, 32, ...
  int level_stride(int s) const { return 4 << s; }
  int decoder_channels(int s) const {
    return encoder_channels[static_cast<size_t>(s)] / reduction_factor;
  }
};

/// Shape arithmetic without building the network.
std::vector<int> encoder_level_shape(const NetworkConfig& cfg, int n, int h,
                                     int w, int level);
std::vector<int> output_shape(const NetworkConfig& cfg, int n, int h, int w);

/// Exact trainable parameter count by closed-form arithmetic over the config;
/// the decoder's shared conv is counted once.
int64_t count_parameters(const NetworkConfig& cfg);

struct ConvBnRelu {
  ConvParams conv;
  BatchNormState bn;
  bool act = true;
  Tensor forward(const Tensor& x);
  static ConvBnRelu make(int in_ch, int out_ch, int k, int stride, int padding,
                         bool act, Pcg32& rng);
};

/// Plain residual block used inside the encoder stages.
struct ResidualBlock {
  ConvParams conv1, conv2;
  BatchNormState bn1, bn2;
  Tensor forward(const Tensor& x);
  static ResidualBlock make(int channels, Pcg32& rng);
};

/// 1x1 channel-reducing transfer: activation(BN(w (*) x + b)).
struct Transfer {
  ConvParams conv;
  BatchNormState bn;
  bool act = true;
  Tensor forward(const Tensor& x);
  static Transfer make(int in_ch, int out_ch, bool act, Pcg32& rng);
};

/// Residual decoder block whose two 3x3 convolutions share one weight tensor;
/// the batch-norm statistics stay independent. in == out channels is required
/// by both the sharing and the residual sum.
struct DecoderBlock {
  ConvParams conv;  // used twice
  BatchNormState bn1, bn2;
  Tensor forward(const Tensor& x);
  static DecoderBlock make(int channels, Pcg32& rng);
};

/// Fuses up to three same-shape branches: stride-2 conv of the shallower
/// transfer, the level's own transfer, stride-2 deconv of the deeper decoder
/// output. Absent branches are skipped; branch shapes must agree with t_cur.
Tensor adaptor_fuse(const Tensor* t_prev, const Tensor& t_cur,
                    const Tensor* d_next, const ConvParams* down,
                    const ConvParams* up);

struct ForwardTrace {
  std::vector<Tensor> encoder_levels;
  std::vector<Tensor> transfers;
  std::vector<Tensor> decoder_outputs;
  Tensor logits_low;  // stride-4 logits before the final upsample
  std::vector<std::pair<std::string, double>> layer_ms;  // set when profiling
};

class RgpNet {
 public:
  RgpNet(const NetworkConfig& cfg, uint64_t seed);

  /// image [N,3,H,W] with H, W divisible by input_multiple() ->
  /// logits [N,num_classes,H,W].
  Tensor forward(const Tensor& image, ForwardTrace* trace = nullptr,
                 bool profile = false);

  /// Encoder stage outputs at strides 4, 8, ..., one per level.
  std::vector<Tensor> encoder_forward(const Tensor& image);
  Tensor transfer_forward(int level, const Tensor& encoder_out);

  void set_training(bool training);
  bool training() const { return training_; }

  /// Runtime severing of the adaptor side branches (ablation / gradient-flow
  /// probes). Downsample paths can only be enabled if the config built them.
  void set_adaptor_paths(bool use_down, bool use_up);

  /// Trainable parameters in construction order with stable names.
  std::vector<std::pair<std::string, Tensor>> parameters();
  /// Parameters plus batch-norm running statistics (the checkpoint set).
  std::vector<std::pair<std::string, Tensor>> state_tensors();

  void zero_grad();

  const NetworkConfig& config() const { return cfg_; }
  DecoderBlock& decoder_block(int level) { return decoder_[static_cast<size_t>(level)]; }
  const ConvParams* adaptor_down(int level) const;
  const ConvParams* adaptor_up(int level) const;

 private:
  NetworkConfig cfg_;
  ConvBnRelu stem1_, stem2_;
  std::vector<ConvBnRelu> enc_down_;                  // levels 1..L-1
  std::vector<std::vector<ResidualBlock>> enc_blocks_;  // per level
  std::vector<Transfer> transfer_;
  std::vector<ConvParams> down_;  // adaptor D for levels 1..L-1 (may be empty)
  std::vector<ConvParams> up_;    // adaptor U for levels 0..L-2
  std::vector<DecoderBlock> decoder_;
  ConvParams head_;
  bool use_down_ = true;
  bool use_up_ = true;
  bool training_ = false;

  void check_input(const Tensor& image) const;
};

}  // namespace rgp

#endif  // RGP_NET_HPP_
