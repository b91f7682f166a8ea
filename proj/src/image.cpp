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
#include "rgp/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "rgp/common.hpp"

namespace rgp {

namespace {

constexpr uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void write_chunk(std::vector<uint8_t>& out, const char type[4],
                 const uint8_t* data, size_t len) {
  put_be32(out, static_cast<uint32_t>(len));
  const size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + len));
  put_be32(out, crc);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

ImageU8 read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  RGP_CHECK_IO(in.good(), "cannot open '", path, "' for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  RGP_CHECK_IO(bytes.size() > 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0,
               "'", path, "' is not a PNG file");

  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  bool saw_end = false;
  while (pos + 8 <= bytes.size()) {
    const uint32_t len = be32(bytes.data() + pos);
    RGP_CHECK_IO(pos + 12 + len <= bytes.size(), "'", path,
                 "': truncated chunk at offset ", pos);
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* data = bytes.data() + pos + 8;
    const uint32_t crc_stored = be32(data + len);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data() + pos + 4, len + 4);
    RGP_CHECK_IO(crc == crc_stored, "'", path, "': CRC mismatch in ",
                 std::string(type, 4), " chunk");
    if (std::memcmp(type, "IHDR", 4) == 0) {
      RGP_CHECK_IO(len == 13, "'", path, "': bad IHDR length");
      width = static_cast<int>(be32(data));
      height = static_cast<int>(be32(data + 4));
      bit_depth = data[8];
      color_type = data[9];
      RGP_CHECK_IO(data[12] == 0, "'", path, "': interlaced PNG not supported");
      RGP_CHECK_IO(bit_depth == 8, "'", path, "': only 8-bit PNG supported, got ",
                   bit_depth);
      RGP_CHECK_IO(color_type == 0 || color_type == 2 || color_type == 6, "'",
                   path, "': unsupported color type ", color_type,
                   " (gray, RGB or RGBA expected)");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
      break;
    }
    pos += 12 + len;
  }
  RGP_CHECK_IO(saw_end, "'", path, "': missing IEND chunk (truncated file?)");
  RGP_CHECK_IO(width > 0 && height > 0, "'", path, "': missing IHDR");
  RGP_CHECK_IO(!idat.empty(), "'", path, "': no image data");

  const int src_ch = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
  const size_t stride = static_cast<size_t>(width) * src_ch;
  std::vector<uint8_t> raw(static_cast<size_t>(height) * (stride + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int zrc = uncompress(raw.data(), &raw_len, idat.data(),
                             static_cast<uLong>(idat.size()));
  RGP_CHECK_IO(zrc == Z_OK && raw_len == raw.size(), "'", path,
               "': corrupt compressed image data (zlib rc ", zrc, ")");

  // Undo per-row filters in place.
  std::vector<uint8_t> prev(stride, 0);
  ImageU8 img;
  img.width = width;
  img.height = height;
  img.channels = src_ch == 1 ? 1 : 3;
  img.pixels.resize(static_cast<size_t>(width) * height * img.channels);
  const int bpp = src_ch;
  std::vector<uint8_t> cur(stride);
  for (int y = 0; y < height; ++y) {
    const uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1);
    const uint8_t filter = src[0];
    const uint8_t* s = src + 1;
    for (size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<size_t>(bpp) ? cur[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<size_t>(bpp) ? prev[i - bpp] : 0;
      int v = s[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default:
          throw IoError(detail::format_msg("'", path, "': bad filter type ",
                                           static_cast<int>(filter), " in row ", y));
      }
      cur[i] = static_cast<uint8_t>(v & 0xff);
    }
    uint8_t* dst = img.row(y);
    if (src_ch == 4) {
      for (int x = 0; x < width; ++x) {
        dst[x * 3 + 0] = cur[static_cast<size_t>(x) * 4 + 0];
        dst[x * 3 + 1] = cur[static_cast<size_t>(x) * 4 + 1];
        dst[x * 3 + 2] = cur[static_cast<size_t>(x) * 4 + 2];
      }
    } else {
      std::memcpy(dst, cur.data(), stride);
    }
    std::swap(prev, cur);
  }
  return img;
}

void write_png(const std::string& path, const ImageU8& img) {
  RGP_CHECK(img.channels == 1 || img.channels == 3,
            "write_png: channels must be 1 or 3, got ", img.channels);
  RGP_CHECK(img.width > 0 && img.height > 0, "write_png: empty image");
  RGP_CHECK(img.pixels.size() ==
                static_cast<size_t>(img.width) * img.height * img.channels,
            "write_png: pixel buffer size mismatch");

  const size_t stride = static_cast<size_t>(img.width) * img.channels;
  std::vector<uint8_t> raw(static_cast<size_t>(img.height) * (stride + 1));
  for (int y = 0; y < img.height; ++y) {
    uint8_t* dst = raw.data() + static_cast<size_t>(y) * (stride + 1);
    dst[0] = 0;  // filter: none
    std::memcpy(dst + 1, img.row(y), stride);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  const int zrc = compress2(comp.data(), &comp_len, raw.data(),
                            static_cast<uLong>(raw.size()), 6);
  RGP_CHECK_IO(zrc == Z_OK, "write_png: zlib compression failed (rc ", zrc, ")");
  comp.resize(comp_len);

  std::vector<uint8_t> out;
  out.insert(out.end(), kPngSig, kPngSig + 8);
  uint8_t ihdr[13];
  ihdr[0] = static_cast<uint8_t>(img.width >> 24);
  ihdr[1] = static_cast<uint8_t>(img.width >> 16);
  ihdr[2] = static_cast<uint8_t>(img.width >> 8);
  ihdr[3] = static_cast<uint8_t>(img.width);
  ihdr[4] = static_cast<uint8_t>(img.height >> 24);
  ihdr[5] = static_cast<uint8_t>(img.height >> 16);
  ihdr[6] = static_cast<uint8_t>(img.height >> 8);
  ihdr[7] = static_cast<uint8_t>(img.height);
  ihdr[8] = 8;  // bit depth
  ihdr[9] = img.channels == 1 ? 0 : 2;
  ihdr[10] = 0;
  ihdr[11] = 0;
  ihdr[12] = 0;
  write_chunk(out, "IHDR", ihdr, 13);
  write_chunk(out, "IDAT", comp.data(), comp.size());
  write_chunk(out, "IEND", nullptr, 0);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  RGP_CHECK_IO(f.good(), "cannot open '", path, "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  RGP_CHECK_IO(f.good(), "failed writing '", path, "'");
}

LabelMap read_label_png(const std::string& path) {
  ImageU8 img = read_png(path);
  RGP_CHECK_IO(img.channels == 1, "label map '", path,
               "' must be single-channel, got ", img.channels, " channels");
  LabelMap lm(img.height, img.width);
  lm.labels = std::move(img.pixels);
  return lm;
}

void write_label_png(const std::string& path, const LabelMap& lm) {
  ImageU8 img;
  img.width = lm.width;
  img.height = lm.height;
  img.channels = 1;
  img.pixels = lm.labels;
  write_png(path, img);
}

Tensor image_to_tensor(const ImageU8& img) {
  Tensor t = Tensor::zeros({3, img.height, img.width});
  float* d = t.data();
  const int64_t hw = static_cast<int64_t>(img.height) * img.width;
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* src = img.row(y);
    for (int x = 0; x < img.width; ++x) {
      const int64_t j = static_cast<int64_t>(y) * img.width + x;
      if (img.channels == 1) {
        const float v = src[x] / 255.0f;
        d[j] = v;
        d[hw + j] = v;
        d[2 * hw + j] = v;
      } else {
        d[j] = src[x * 3 + 0] / 255.0f;
        d[hw + j] = src[x * 3 + 1] / 255.0f;
        d[2 * hw + j] = src[x * 3 + 2] / 255.0f;
      }
    }
  }
  return t;
}

ImageU8 tensor_to_image(const Tensor& chw) {
  RGP_CHECK_SHAPE(chw.ndim() == 3 && chw.dim(0) == 3,
                  "tensor_to_image: expected [3,H,W], got ", shape_str(chw.shape()));
  ImageU8 img;
  img.height = chw.dim(1);
  img.width = chw.dim(2);
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
  const float* d = chw.data();
  const int64_t hw = static_cast<int64_t>(img.height) * img.width;
  for (int64_t j = 0; j < hw; ++j) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(d[c * hw + j] * 255.0f, 0.0f, 255.0f);
      img.pixels[static_cast<size_t>(j) * 3 + c] =
          static_cast<uint8_t>(std::lround(v));
    }
  }
  return img;
}

std::array<uint8_t, 3> class_color(int class_id) {
  if (class_id == 0) return {40, 40, 40};
  // HSV walk with the golden-ratio hue step, fixed saturation/value.
  const double hue = std::fmod(0.618033988749895 * class_id, 1.0) * 6.0;
  const double s = 0.65, v = 0.92;
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
  return {static_cast<uint8_t>(std::lround(r * 255)),
          static_cast<uint8_t>(std::lround(g * 255)),
          static_cast<uint8_t>(std::lround(b * 255))};
}

ImageU8 colorize_labels(const LabelMap& lm) {
  ImageU8 img;
  img.width = lm.width;
  img.height = lm.height;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(lm.width) * lm.height * 3);
  for (int64_t j = 0; j < lm.size(); ++j) {
    const uint8_t v = lm.labels[static_cast<size_t>(j)];
    std::array<uint8_t, 3> c =
        v == kIgnoreLabel ? std::array<uint8_t, 3>{255, 255, 255} : class_color(v);
    img.pixels[static_cast<size_t>(j) * 3 + 0] = c[0];
    img.pixels[static_cast<size_t>(j) * 3 + 1] = c[1];
    img.pixels[static_cast<size_t>(j) * 3 + 2] = c[2];
  }
  return img;
}

ImageU8 colorize_signed(const std::vector<float>& values, int height, int width) {
  RGP_CHECK(values.size() == static_cast<size_t>(height) * width,
            "colorize_signed: value count does not match dimensions");
  float max_abs = 0.0f;
  for (float v : values) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0f) max_abs = 1.0f;
  ImageU8 img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(width) * height * 3);
  for (size_t j = 0; j < values.size(); ++j) {
    const float t = std::clamp(values[j] / max_abs, -1.0f, 1.0f);
    uint8_t r = 255, g = 255, b = 255;
    if (t > 0) {  // red shades for positive
      g = b = static_cast<uint8_t>(std::lround(255 * (1.0f - t)));
    } else if (t < 0) {  // blue shades for negative
      r = g = static_cast<uint8_t>(std::lround(255 * (1.0f + t)));
    }
    img.pixels[j * 3 + 0] = r;
    img.pixels[j * 3 + 1] = g;
    img.pixels[j * 3 + 2] = b;
  }
  return img;
}

}  // namespace rgp
