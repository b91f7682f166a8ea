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
#include "rgp/net.hpp"

#include <chrono>

#include "rgp/common.hpp"

namespace rgp {

void NetworkConfig::validate() const {
  RGP_CHECK(num_levels >= 1, "network: num_levels must be >= 1, got ", num_levels);
  RGP_CHECK(static_cast<int>(encoder_channels.size()) == num_levels,
            "network: encoder_channels has ", encoder_channels.size(),
            " entries for ", num_levels, " levels");
  RGP_CHECK(reduction_factor >= 1, "network: reduction_factor must be >= 1, got ",
            reduction_factor);
  for (int s = 0; s < num_levels; ++s) {
    const int ch = encoder_channels[static_cast<size_t>(s)];
    RGP_CHECK(ch >= 1, "network: encoder_channels[", s, "] must be >= 1, got ", ch);
    RGP_CHECK(ch % reduction_factor == 0, "network: encoder_channels[", s, "] = ",
              ch, " is not divisible by reduction_factor ", reduction_factor);
  }
  RGP_CHECK(num_classes >= 2, "network: num_classes must be >= 2, got ", num_classes);
  RGP_CHECK(encoder_blocks_per_level >= 1,
            "network: encoder_blocks_per_level must be >= 1, got ",
            encoder_blocks_per_level);
  RGP_CHECK(deconv_kernel == 2 || deconv_kernel == 4,
            "network: deconv_kernel must be 2 or 4, got ", deconv_kernel);
  RGP_CHECK(activation == "relu" || activation == "none",
            "network: activation must be 'relu' or 'none', got '", activation, "'");
}

std::vector<int> encoder_level_shape(const NetworkConfig& cfg, int n, int h,
                                     int w, int level) {
  cfg.validate();
  RGP_CHECK(level >= 0 && level < cfg.num_levels, "level ", level,
            " out of range for ", cfg.num_levels, " levels");
  const int stride = cfg.level_stride(level);
  RGP_CHECK_SHAPE(h % cfg.input_multiple() == 0 && w % cfg.input_multiple() == 0,
                  "input ", h, "x", w, " must be divisible by ",
                  cfg.input_multiple());
  return {n, cfg.encoder_channels[static_cast<size_t>(level)], h / stride,
          w / stride};
}

std::vector<int> output_shape(const NetworkConfig& cfg, int n, int h, int w) {
  cfg.validate();
  RGP_CHECK_SHAPE(h % cfg.input_multiple() == 0 && w % cfg.input_multiple() == 0,
                  "input ", h, "x", w, " must be divisible by ",
                  cfg.input_multiple());
  return {n, cfg.num_classes, h, w};
}

int64_t count_parameters(const NetworkConfig& cfg) {
  cfg.validate();
  const auto& ch = cfg.encoder_channels;
  const int L = cfg.num_levels;
  const int blocks = cfg.encoder_blocks_per_level;
  const int k2 = cfg.deconv_kernel * cfg.deconv_kernel;
  int64_t p = 0;
  const int64_t c0 = ch[0];
  p += 3 * c0 * 9 + 2 * c0;        // stem1 conv + bn
  p += c0 * c0 * 9 + 2 * c0;       // stem2 conv + bn
  for (int s = 0; s < L; ++s) {
    const int64_t cs = ch[static_cast<size_t>(s)];
    if (s > 0) p += ch[static_cast<size_t>(s - 1)] * cs * 9 + 2 * cs;
    p += blocks * (2 * cs * cs * 9 + 2 * (2 * cs));
    const int64_t ds = cs / cfg.reduction_factor;
    p += cs * ds + ds + 2 * ds;    // transfer conv + bias + bn
    if (s > 0 && cfg.enable_adaptor_downsample) {
      const int64_t dp = ch[static_cast<size_t>(s - 1)] / cfg.reduction_factor;
      p += dp * ds * 9 + ds;
    }
    if (s < L - 1) {
      const int64_t dn = ch[static_cast<size_t>(s + 1)] / cfg.reduction_factor;
      p += ds * dn * k2 + ds;      // deconv weight [ds, dn, k, k] + bias
    }
    p += ds * ds * 9 + 2 * (2 * ds);  // shared decoder conv + two bns
  }
  const int64_t d0 = ch[0] / cfg.reduction_factor;
  p += d0 * cfg.num_classes + cfg.num_classes;  // head
  return p;
}

Tensor ConvBnRelu::forward(const Tensor& x) {
  Tensor y = conv2d(x, conv);
  y = batchnorm2d(y, bn);
  return act ? relu(y) : y;
}

ConvBnRelu ConvBnRelu::make(int in_ch, int out_ch, int k, int stride,
                            int padding, bool act, Pcg32& rng) {
  ConvBnRelu m;
  m.conv = ConvParams::make(out_ch, in_ch, k, k, stride, padding,
                            /*with_bias=*/false, rng);
  m.bn = BatchNormState::make(out_ch);
  m.act = act;
  return m;
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor y = relu(batchnorm2d(conv2d(x, conv1), bn1));
  y = batchnorm2d(conv2d(y, conv2), bn2);
  return relu(add(x, y));
}

ResidualBlock ResidualBlock::make(int channels, Pcg32& rng) {
  ResidualBlock b;
  b.conv1 = ConvParams::make(channels, channels, 3, 3, 1, 1, false, rng);
  b.bn1 = BatchNormState::make(channels);
  b.conv2 = ConvParams::make(channels, channels, 3, 3, 1, 1, false, rng);
  b.bn2 = BatchNormState::make(channels);
  return b;
}

Tensor Transfer::forward(const Tensor& x) {
  Tensor y = batchnorm2d(conv2d(x, conv), bn);
  return act ? relu(y) : y;
}

Transfer Transfer::make(int in_ch, int out_ch, bool act, Pcg32& rng) {
  Transfer t;
  t.conv = ConvParams::make(out_ch, in_ch, 1, 1, 1, 0, /*with_bias=*/true, rng);
  t.bn = BatchNormState::make(out_ch);
  t.act = act;
  return t;
}

Tensor DecoderBlock::forward(const Tensor& x) {
  RGP_CHECK_SHAPE(x.dim(1) == conv.out_channels(),
                  "decoder block: input channels ", x.dim(1),
                  " do not match block channels ", conv.out_channels());
  Tensor y = relu(batchnorm2d(conv2d(x, conv), bn1));
  y = batchnorm2d(conv2d(y, conv), bn2);  // same weight tensor, second use
  return relu(add(x, y));
}

DecoderBlock DecoderBlock::make(int channels, Pcg32& rng) {
  RGP_CHECK(channels >= 1, "decoder block: channels must be >= 1, got ", channels);
  DecoderBlock b;
  b.conv = ConvParams::make(channels, channels, 3, 3, 1, 1, false, rng);
  b.bn1 = BatchNormState::make(channels);
  b.bn2 = BatchNormState::make(channels);
  return b;
}

Tensor adaptor_fuse(const Tensor* t_prev, const Tensor& t_cur,
                    const Tensor* d_next, const ConvParams* down,
                    const ConvParams* up) {
  RGP_CHECK(t_cur.defined(), "adaptor: the level's own transfer output is required");
  Tensor acc;
  if (t_prev) {
    RGP_CHECK(down != nullptr, "adaptor: downsample branch given without its conv");
    Tensor d = conv2d(*t_prev, *down);
    RGP_CHECK_SHAPE(d.shape() == t_cur.shape(),
                    "adaptor: downsample branch shape ", shape_str(d.shape()),
                    " does not match transfer shape ", shape_str(t_cur.shape()));
    acc = add(d, t_cur);
  } else {
    acc = t_cur;
  }
  if (d_next) {
    RGP_CHECK(up != nullptr, "adaptor: upsample branch given without its deconv");
    Tensor u = deconv2d(*d_next, *up);
    RGP_CHECK_SHAPE(u.shape() == t_cur.shape(), "adaptor: upsample branch shape ",
                    shape_str(u.shape()), " does not match transfer shape ",
                    shape_str(t_cur.shape()));
    acc = add(acc, u);
  }
  return acc;
}

RgpNet::RgpNet(const NetworkConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Pcg32 rng(seed);
  const auto& ch = cfg_.encoder_channels;
  const int L = cfg_.num_levels;
  const bool act = cfg_.activation == "relu";

  stem1_ = ConvBnRelu::make(3, ch[0], 3, 2, 1, true, rng);
  stem2_ = ConvBnRelu::make(ch[0], ch[0], 3, 2, 1, true, rng);
  enc_blocks_.resize(static_cast<size_t>(L));
  for (int s = 0; s < L; ++s) {
    if (s > 0)
      enc_down_.push_back(ConvBnRelu::make(ch[static_cast<size_t>(s - 1)],
                                           ch[static_cast<size_t>(s)], 3, 2, 1,
                                           true, rng));
    for (int b = 0; b < cfg_.encoder_blocks_per_level; ++b)
      enc_blocks_[static_cast<size_t>(s)].push_back(
          ResidualBlock::make(ch[static_cast<size_t>(s)], rng));
  }
  for (int s = 0; s < L; ++s)
    transfer_.push_back(Transfer::make(ch[static_cast<size_t>(s)],
                                       cfg_.decoder_channels(s), act, rng));
  if (cfg_.enable_adaptor_downsample) {
    // The downsample branch is auxiliary next to the transfer + upsample sum;
    // a damped init keeps the three-way fusion variance-stable early on.
    for (int s = 1; s < L; ++s)
      down_.push_back(ConvParams::make(cfg_.decoder_channels(s),
                                       cfg_.decoder_channels(s - 1), 3, 3, 2, 1,
                                       /*with_bias=*/true, rng, /*gain=*/0.1));
  }
  for (int s = 0; s < L - 1; ++s)
    up_.push_back(ConvParams::make_deconv2x(cfg_.decoder_channels(s),
                                            cfg_.decoder_channels(s + 1),
                                            cfg_.deconv_kernel,
                                            /*with_bias=*/true, rng));
  for (int s = 0; s < L; ++s)
    decoder_.push_back(DecoderBlock::make(cfg_.decoder_channels(s), rng));
  head_ = ConvParams::make(cfg_.num_classes, cfg_.decoder_channels(0), 1, 1, 1,
                           0, /*with_bias=*/true, rng);
  use_down_ = cfg_.enable_adaptor_downsample;
  use_up_ = true;
  set_training(false);
}

void RgpNet::check_input(const Tensor& image) const {
  RGP_CHECK_SHAPE(image.defined() && image.ndim() == 4 && image.dim(1) == 3,
                  "network input must be [N,3,H,W], got ",
                  image.defined() ? shape_str(image.shape()) : "<undefined>");
  const int mult = cfg_.input_multiple();
  RGP_CHECK_SHAPE(image.dim(2) % mult == 0, "input height ", image.dim(2),
                  " is not divisible by ", mult, " (required for ",
                  cfg_.num_levels, " levels)");
  RGP_CHECK_SHAPE(image.dim(3) % mult == 0, "input width ", image.dim(3),
                  " is not divisible by ", mult, " (required for ",
                  cfg_.num_levels, " levels)");
}

std::vector<Tensor> RgpNet::encoder_forward(const Tensor& image) {
  check_input(image);
  std::vector<Tensor> levels;
  Tensor x = stem2_.forward(stem1_.forward(image));
  for (int s = 0; s < cfg_.num_levels; ++s) {
    if (s > 0) x = enc_down_[static_cast<size_t>(s - 1)].forward(x);
    for (auto& blk : enc_blocks_[static_cast<size_t>(s)]) x = blk.forward(x);
    levels.push_back(x);
  }
  return levels;
}

Tensor RgpNet::transfer_forward(int level, const Tensor& encoder_out) {
  RGP_CHECK(level >= 0 && level < cfg_.num_levels, "transfer level ", level,
            " out of range");
  RGP_CHECK_SHAPE(
      encoder_out.dim(1) == cfg_.encoder_channels[static_cast<size_t>(level)],
      "transfer: input channels ", encoder_out.dim(1), " do not match level ",
      level, " channels ", cfg_.encoder_channels[static_cast<size_t>(level)]);
  return transfer_[static_cast<size_t>(level)].forward(encoder_out);
}

Tensor RgpNet::forward(const Tensor& image, ForwardTrace* trace, bool profile) {
  check_input(image);
  using Clock = std::chrono::steady_clock;
  auto tick = Clock::now();
  auto lap = [&](const char* name) {
    if (!profile || !trace) return;
    auto now = Clock::now();
    trace->layer_ms.emplace_back(
        name, std::chrono::duration<double, std::milli>(now - tick).count());
    tick = now;
  };

  const int L = cfg_.num_levels;
  Tensor x = stem2_.forward(stem1_.forward(image));
  lap("stem");
  std::vector<Tensor> e;
  for (int s = 0; s < L; ++s) {
    if (s > 0) x = enc_down_[static_cast<size_t>(s - 1)].forward(x);
    for (auto& blk : enc_blocks_[static_cast<size_t>(s)]) x = blk.forward(x);
    e.push_back(x);
    lap(("encoder_level" + std::to_string(s)).c_str());
  }
  std::vector<Tensor> t;
  for (int s = 0; s < L; ++s)
    t.push_back(transfer_[static_cast<size_t>(s)].forward(e[static_cast<size_t>(s)]));
  lap("transfers");

  std::vector<Tensor> d(static_cast<size_t>(L));
  for (int s = L - 1; s >= 0; --s) {
    const bool has_down = s > 0 && use_down_ && !down_.empty();
    const bool has_up = s < L - 1 && use_up_;
    const Tensor* tp = has_down ? &t[static_cast<size_t>(s - 1)] : nullptr;
    const Tensor* dn = has_up ? &d[static_cast<size_t>(s + 1)] : nullptr;
    Tensor m = adaptor_fuse(tp, t[static_cast<size_t>(s)], dn,
                            has_down ? &down_[static_cast<size_t>(s - 1)] : nullptr,
                            has_up ? &up_[static_cast<size_t>(s)] : nullptr);
    d[static_cast<size_t>(s)] = decoder_[static_cast<size_t>(s)].forward(m);
    lap(("decoder_level" + std::to_string(s)).c_str());
  }
  Tensor logits_low = conv2d(d[0], head_);
  lap("head");
  Tensor logits = bilinear_resize(logits_low, image.dim(2), image.dim(3));
  lap("upsample");

  if (trace) {
    trace->encoder_levels = std::move(e);
    trace->transfers = std::move(t);
    trace->decoder_outputs = std::move(d);
    trace->logits_low = logits_low;
  }
  return logits;
}

void RgpNet::set_training(bool training) {
  training_ = training;
  auto set_bn = [training](BatchNormState& s) { s.training_mode = training; };
  set_bn(stem1_.bn);
  set_bn(stem2_.bn);
  for (auto& d : enc_down_) set_bn(d.bn);
  for (auto& lvl : enc_blocks_)
    for (auto& b : lvl) {
      set_bn(b.bn1);
      set_bn(b.bn2);
    }
  for (auto& t : transfer_) set_bn(t.bn);
  for (auto& d : decoder_) {
    set_bn(d.bn1);
    set_bn(d.bn2);
  }
}

void RgpNet::set_adaptor_paths(bool use_down, bool use_up) {
  RGP_CHECK(!use_down || !down_.empty(),
            "adaptor downsample paths were disabled in the config and cannot "
            "be re-enabled at runtime");
  use_down_ = use_down;
  use_up_ = use_up;
}

const ConvParams* RgpNet::adaptor_down(int level) const {
  if (down_.empty() || level <= 0 || level >= cfg_.num_levels) return nullptr;
  return &down_[static_cast<size_t>(level - 1)];
}

const ConvParams* RgpNet::adaptor_up(int level) const {
  if (level < 0 || level >= cfg_.num_levels - 1) return nullptr;
  return &up_[static_cast<size_t>(level)];
}

std::vector<std::pair<std::string, Tensor>> RgpNet::parameters() {
  std::vector<std::pair<std::string, Tensor>> out;
  auto add_conv = [&out](const std::string& name, ConvParams& p) {
    out.emplace_back(name + ".weight", p.weight);
    if (p.has_bias()) out.emplace_back(name + ".bias", p.bias);
  };
  auto add_bn = [&out](const std::string& name, BatchNormState& s) {
    out.emplace_back(name + ".gamma", s.gamma);
    out.emplace_back(name + ".beta", s.beta);
  };
  add_conv("stem1.conv", stem1_.conv);
  add_bn("stem1.bn", stem1_.bn);
  add_conv("stem2.conv", stem2_.conv);
  add_bn("stem2.bn", stem2_.bn);
  for (int s = 0; s < cfg_.num_levels; ++s) {
    const std::string lvl = "enc" + std::to_string(s);
    if (s > 0) {
      add_conv(lvl + ".down.conv", enc_down_[static_cast<size_t>(s - 1)].conv);
      add_bn(lvl + ".down.bn", enc_down_[static_cast<size_t>(s - 1)].bn);
    }
    for (int b = 0; b < cfg_.encoder_blocks_per_level; ++b) {
      auto& blk = enc_blocks_[static_cast<size_t>(s)][static_cast<size_t>(b)];
      const std::string bn = lvl + ".block" + std::to_string(b);
      add_conv(bn + ".conv1", blk.conv1);
      add_bn(bn + ".bn1", blk.bn1);
      add_conv(bn + ".conv2", blk.conv2);
      add_bn(bn + ".bn2", blk.bn2);
    }
  }
  for (int s = 0; s < cfg_.num_levels; ++s) {
    const std::string name = "transfer" + std::to_string(s);
    add_conv(name + ".conv", transfer_[static_cast<size_t>(s)].conv);
    add_bn(name + ".bn", transfer_[static_cast<size_t>(s)].bn);
  }
  if (!down_.empty()) {
    for (int s = 1; s < cfg_.num_levels; ++s)
      add_conv("adaptor" + std::to_string(s) + ".down",
               down_[static_cast<size_t>(s - 1)]);
  }
  for (int s = 0; s < cfg_.num_levels - 1; ++s)
    add_conv("adaptor" + std::to_string(s) + ".up", up_[static_cast<size_t>(s)]);
  for (int s = 0; s < cfg_.num_levels; ++s) {
    const std::string name = "decoder" + std::to_string(s);
    add_conv(name + ".conv", decoder_[static_cast<size_t>(s)].conv);
    add_bn(name + ".bn1", decoder_[static_cast<size_t>(s)].bn1);
    add_bn(name + ".bn2", decoder_[static_cast<size_t>(s)].bn2);
  }
  add_conv("head", head_);
  return out;
}

std::vector<std::pair<std::string, Tensor>> RgpNet::state_tensors() {
  // Parameters first, then running statistics in a matching stable order.
  std::vector<std::pair<std::string, Tensor>> out = parameters();
  auto add_stats = [&out](const std::string& name, BatchNormState& s) {
    out.emplace_back(name + ".running_mean", s.running_mean);
    out.emplace_back(name + ".running_var", s.running_var);
  };
  add_stats("stem1.bn", stem1_.bn);
  add_stats("stem2.bn", stem2_.bn);
  for (int s = 1; s < cfg_.num_levels; ++s)
    add_stats("enc" + std::to_string(s) + ".down.bn",
              enc_down_[static_cast<size_t>(s - 1)].bn);
  for (int s = 0; s < cfg_.num_levels; ++s)
    for (int b = 0; b < cfg_.encoder_blocks_per_level; ++b) {
      auto& blk = enc_blocks_[static_cast<size_t>(s)][static_cast<size_t>(b)];
      const std::string bn =
          "enc" + std::to_string(s) + ".block" + std::to_string(b);
      add_stats(bn + ".bn1", blk.bn1);
      add_stats(bn + ".bn2", blk.bn2);
    }
  for (int s = 0; s < cfg_.num_levels; ++s)
    add_stats("transfer" + std::to_string(s) + ".bn",
              transfer_[static_cast<size_t>(s)].bn);
  for (int s = 0; s < cfg_.num_levels; ++s) {
    add_stats("decoder" + std::to_string(s) + ".bn1",
              decoder_[static_cast<size_t>(s)].bn1);
    add_stats("decoder" + std::to_string(s) + ".bn2",
              decoder_[static_cast<size_t>(s)].bn2);
  }
  return out;
}

void RgpNet::zero_grad() {
  for (auto& [name, tensor] : parameters()) {
    (void)name;
    if (tensor.has_grad()) tensor.zero_grad();
  }
}

}  // namespace rgp
