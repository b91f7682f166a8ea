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
#ifndef RGP_DATA_HPP_
#define RGP_DATA_HPP_

#include <string>
#include <vector>

#include "rgp/image.hpp"
#include "rgp/losses.hpp"
#include "rgp/rng.hpp"
#include "rgp/tensor.hpp"

namespace rgp {

/// Directory layout: images/*.png and labels/*.png with matching stems plus a
/// dataset.json carrying num_classes, class names and the ignore index.
struct SegmentationDataset {
  struct Item {
    std::string stem;
    std::string image_path;
    std::string label_path;
  };

  std::string root;
  std::vector<Item> items;
  int num_classes = 0;
  std::vector<std::string> class_names;
  int ignore_index = kIgnoreLabel;

  size_t size() const { return items.size(); }

  static SegmentationDataset load(const std::string& dir);
};

/// Decoded sample pair.
struct Sample {
  Tensor image;  // [3,H,W], values in [0,1]
  LabelMap labels;
};

Sample load_sample(const SegmentationDataset::Item& item);

/// Writes n image/label pairs of random axis-aligned rectangles, ellipses and
/// bars over a noisy background. Class 0 is background; classes 1..C-1 cycle
/// over the drawn shapes with fixed per-class colors. Deterministic per seed:
/// regenerating with the same arguments produces byte-identical files.
SegmentationDataset generate_synthetic(int n, int height, int width,
                                       int num_classes, uint64_t seed,
                                       const std::string& out_dir);

}  // namespace rgp

#endif  // RGP_DATA_HPP_
