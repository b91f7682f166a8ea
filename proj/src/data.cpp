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
#include "rgp/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rgp/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rgp {

SegmentationDataset SegmentationDataset::load(const std::string& dir) {
  const fs::path root(dir);
  RGP_CHECK_IO(fs::is_directory(root), "dataset directory '", dir, "' not found");
  const fs::path meta_path = root / "dataset.json";
  RGP_CHECK_IO(fs::is_regular_file(meta_path), "'", meta_path.string(),
               "' not found");
  std::ifstream meta_in(meta_path);
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw IoError(detail::format_msg("'", meta_path.string(),
                                     "': invalid JSON (", e.what(), ")"));
  }
  SegmentationDataset ds;
  ds.root = dir;
  RGP_CHECK_IO(meta.contains("num_classes"), "'", meta_path.string(),
               "': missing num_classes");
  ds.num_classes = meta["num_classes"].get<int>();
  RGP_CHECK_IO(ds.num_classes >= 2, "'", meta_path.string(),
               "': num_classes must be >= 2, got ", ds.num_classes);
  if (meta.contains("class_names"))
    ds.class_names = meta["class_names"].get<std::vector<std::string>>();
  if (meta.contains("ignore_index"))
    ds.ignore_index = meta["ignore_index"].get<int>();

  const fs::path images = root / "images";
  const fs::path labels = root / "labels";
  RGP_CHECK_IO(fs::is_directory(images), "'", images.string(), "' not found");
  RGP_CHECK_IO(fs::is_directory(labels), "'", labels.string(), "' not found");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() == ".png")
      stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  RGP_CHECK_IO(!stems.empty(), "dataset '", dir, "' has no images");
  for (const auto& stem : stems) {
    const fs::path label = labels / (stem + ".png");
    RGP_CHECK_IO(fs::is_regular_file(label), "label '", label.string(),
                 "' missing for image stem '", stem, "'");
    ds.items.push_back({stem, (images / (stem + ".png")).string(), label.string()});
  }
  return ds;
}

Sample load_sample(const SegmentationDataset::Item& item) {
  Sample s;
  ImageU8 img = read_png(item.image_path);
  s.image = image_to_tensor(img);
  s.labels = read_label_png(item.label_path);
  RGP_CHECK_IO(s.labels.height == img.height && s.labels.width == img.width,
               "sample '", item.stem, "': image is ", img.height, "x", img.width,
               " but labels are ", s.labels.height, "x", s.labels.width);
  return s;
}

namespace {

// Class identity is geometric (rectangle / ellipse / bar), not chromatic:
// every shape draws in a random color, so a pixel's class can only be read
// from shape context. Bars are thin and elongated; rectangles and ellipses
// differ in boundary geometry only.
struct Shape {
  enum Kind { kRect, kEllipse, kBar } kind;
  int cy, cx, ry, rx;
  uint8_t cls;
  std::array<uint8_t, 3> color;

  bool contains(int y, int x) const {
    switch (kind) {
      case kEllipse: {
        const double dy = (y - cy) / static_cast<double>(ry);
        const double dx = (x - cx) / static_cast<double>(rx);
        return dy * dy + dx * dx <= 1.0;
      }
      default:
        return std::abs(y - cy) <= ry && std::abs(x - cx) <= rx;
    }
  }

  bool overlaps(const Shape& other, int margin) const {
    return std::abs(cy - other.cy) <= ry + other.ry + margin &&
           std::abs(cx - other.cx) <= rx + other.rx + margin;
  }
};

uint8_t clamp_u8(int v) { return static_cast<uint8_t>(std::clamp(v, 0, 255)); }

std::array<uint8_t, 3> random_shape_color(Pcg32& rng) {
  // Random hue at fixed-ish saturation so shapes always stand off the dark
  // background but carry no class information.
  const double hue = rng.next_double() * 6.0;
  const double s = 0.55 + 0.25 * rng.next_double();
  const double v = 0.75 + 0.2 * rng.next_double();
  const int i = static_cast<int>(hue);
  const double f = hue - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r, g, b;
  switch (i % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {clamp_u8(static_cast<int>(std::lround(r * 255))),
          clamp_u8(static_cast<int>(std::lround(g * 255))),
          clamp_u8(static_cast<int>(std::lround(b * 255)))};
}

}  // namespace

SegmentationDataset generate_synthetic(int n, int height, int width,
                                       int num_classes, uint64_t seed,
                                       const std::string& out_dir) {
  RGP_CHECK(num_classes >= 2 && num_classes <= 4,
            "synthetic dataset: shapes are rectangles, ellipses and bars, so "
            "num_classes must be in [2,4], got ",
            num_classes);
  RGP_CHECK(n >= 1, "synthetic dataset: need at least 1 image, got ", n);
  RGP_CHECK(height % 32 == 0 && width % 32 == 0,
            "synthetic dataset: dimensions must be divisible by 32, got ",
            height, "x", width);

  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "labels", ec);
  RGP_CHECK_IO(fs::is_directory(root / "images") && fs::is_directory(root / "labels"),
               "cannot create dataset directories under '", out_dir, "'");

  Pcg32 rng(seed);
  int shape_counter = 0;
  for (int i = 0; i < n; ++i) {
    ImageU8 img;
    img.width = width;
    img.height = height;
    img.channels = 3;
    img.pixels.assign(static_cast<size_t>(width) * height * 3, 0);
    LabelMap lm(height, width, 0);

    const int bg = 35 + static_cast<int>(rng.next_below(30));
    const int nshapes = 2 + static_cast<int>(rng.next_below(2));
    const int kinds_used = std::min(3, num_classes - 1);
    std::vector<Shape> shapes;
    for (int s = 0; s < nshapes; ++s) {
      Shape sh;
      const int kind_index = shape_counter % kinds_used;
      sh.kind = static_cast<Shape::Kind>(kind_index);
      sh.cls = static_cast<uint8_t>(1 + kind_index);
      ++shape_counter;
      // Non-overlapping placement so each shape's geometry stays readable.
      bool placed = false;
      for (int attempt = 0; attempt < 24 && !placed; ++attempt) {
        const int min_r = std::max(6, height / 8);
        const int max_r = std::max(min_r + 1, (height * 5) / 16);
        sh.ry = min_r + static_cast<int>(rng.next_below(max_r - min_r));
        sh.rx = min_r + static_cast<int>(rng.next_below(max_r - min_r));
        if (sh.kind == Shape::kBar) {
          const bool horizontal = rng.bernoulli(0.5);
          const int thin = 2 + static_cast<int>(rng.next_below(3));
          if (horizontal)
            sh.ry = thin;
          else
            sh.rx = thin;
        }
        sh.cy = sh.ry + static_cast<int>(rng.next_below(std::max(1, height - 2 * sh.ry)));
        sh.cx = sh.rx + static_cast<int>(rng.next_below(std::max(1, width - 2 * sh.rx)));
        placed = true;
        for (const Shape& prev : shapes)
          if (sh.overlaps(prev, 2)) placed = false;
      }
      if (!placed) continue;
      sh.color = random_shape_color(rng);
      shapes.push_back(sh);
    }

    for (int y = 0; y < height; ++y) {
      uint8_t* row = img.row(y);
      for (int x = 0; x < width; ++x) {
        int r = bg, g = bg + 8, b = bg + 16;
        uint8_t cls = 0;
        // later shapes draw over earlier ones
        for (const Shape& sh : shapes) {
          if (sh.contains(y, x)) {
            r = sh.color[0];
            g = sh.color[1];
            b = sh.color[2];
            cls = sh.cls;
          }
        }
        const int noise_r = static_cast<int>(rng.next_below(21)) - 10;
        const int noise_g = static_cast<int>(rng.next_below(21)) - 10;
        const int noise_b = static_cast<int>(rng.next_below(21)) - 10;
        row[x * 3 + 0] = clamp_u8(r + noise_r);
        row[x * 3 + 1] = clamp_u8(g + noise_g);
        row[x * 3 + 2] = clamp_u8(b + noise_b);
        lm.at(y, x) = cls;
      }
    }

    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d", i);
    write_png((root / "images" / (std::string(name) + ".png")).string(), img);
    write_label_png((root / "labels" / (std::string(name) + ".png")).string(), lm);
  }

  json meta;
  meta["num_classes"] = num_classes;
  const std::vector<std::string> all_names = {"background", "rectangle",
                                              "ellipse", "bar"};
  std::vector<std::string> names(all_names.begin(),
                                 all_names.begin() + num_classes);
  meta["class_names"] = names;
  meta["ignore_index"] = static_cast<int>(kIgnoreLabel);
  std::ofstream meta_out(root / "dataset.json");
  RGP_CHECK_IO(meta_out.good(), "cannot write '", (root / "dataset.json").string(), "'");
  meta_out << meta.dump(2) << "\n";
  meta_out.close();

  return SegmentationDataset::load(out_dir);
}

}  // namespace rgp
