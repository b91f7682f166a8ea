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
#ifndef RGP_IMAGE_HPP_
#define RGP_IMAGE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rgp/losses.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t* row(int y) {
    return pixels.data() + static_cast<size_t>(y) * width * channels;
  }
  const uint8_t* row(int y) const {
    return pixels.data() + static_cast<size_t>(y) * width * channels;
  }
};

/// Reads an 8-bit, non-interlaced PNG (gray, RGB, or RGBA with alpha dropped).
ImageU8 read_png(const std::string& path);

/// Writes gray or RGB 8-bit PNG.
void write_png(const std::string& path, const ImageU8& img);

LabelMap read_label_png(const std::string& path);
void write_label_png(const std::string& path, const LabelMap& lm);

/// Image [3,H,W] tensor in [0,1] from 8-bit RGB (gray replicated).
Tensor image_to_tensor(const ImageU8& img);
ImageU8 tensor_to_image(const Tensor& chw);

/// Fixed per-class display color: class 0 is dark gray, others walk the hue
/// wheel by the golden ratio. Stable across runs so outputs are comparable.
std::array<uint8_t, 3> class_color(int class_id);

ImageU8 colorize_labels(const LabelMap& lm);

/// Signed colormap for entropy differences: blue for negative, red for
/// positive, white near zero; scaled by the largest magnitude.
ImageU8 colorize_signed(const std::vector<float>& values, int height, int width);

}  // namespace rgp

#endif  // RGP_IMAGE_HPP_
