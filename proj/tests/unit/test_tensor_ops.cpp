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
#include <cmath>

#include "doctest.h"
#include "rgp/autograd.hpp"
#include "rgp/ops.hpp"
#include "support/grad_check.hpp"
#include "support/oracles.hpp"

using namespace rgp;
using rgp::testing::random_tensor;

TEST_CASE("tensor invariants") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.numel() == 6);
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0f, 2.0f}), ShapeError);
  Tensor s = Tensor::scalar(4.0f);
  CHECK(s.item() == 4.0f);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("conv2d identity kernel") {
  Pcg32 rng(7);
  Tensor x = random_tensor({1, 1, 5, 5}, rng);
  ConvParams p;
  p.weight = Tensor::from_values({1, 1, 1, 1}, {1.0f});
  p.bias = Tensor::zeros({1});
  p.stride = 1;
  p.padding = 0;
  Tensor y = conv2d(x, p);
  REQUIRE(y.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("conv2d 3x3 ones on 3x3 ones, pad 1") {
  Tensor x = Tensor::full({1, 1, 3, 3}, 1.0f);
  ConvParams p;
  p.weight = Tensor::full({1, 1, 3, 3}, 1.0f);
  p.stride = 1;
  p.padding = 1;
  Tensor y = conv2d(x, p);
  CHECK(y.at({0, 0, 1, 1}) == doctest::Approx(9.0f));
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(4.0f));
  CHECK(y.at({0, 0, 0, 2}) == doctest::Approx(4.0f));
  CHECK(y.at({0, 0, 2, 0}) == doctest::Approx(4.0f));
  CHECK(y.at({0, 0, 2, 2}) == doctest::Approx(4.0f));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(6.0f));
}

TEST_CASE("conv2d stride-2 halves a 128 map to 64") {
  Pcg32 rng(3);
  Tensor x = Tensor::zeros({1, 2, 128, 128});
  ConvParams p = ConvParams::make(2, 2, 3, 3, 2, 1, true, rng);
  Tensor y = conv2d(x, p);
  CHECK(y.shape() == std::vector<int>{1, 2, 64, 64});
}

TEST_CASE("conv2d shape errors name the offending dimension") {
  Pcg32 rng(3);
  Tensor x = Tensor::zeros({1, 3, 8, 8});
  ConvParams p = ConvParams::make(4, 2, 3, 3, 1, 1, true, rng);
  CHECK_THROWS_WITH_AS(conv2d(x, p),
                       doctest::Contains("input channels (3)"), ShapeError);
  ConvParams big = ConvParams::make(1, 3, 11, 11, 1, 0, false, rng);
  CHECK_THROWS_WITH_AS(conv2d(x, big), doctest::Contains("kernel height"),
                       ShapeError);
}

TEST_CASE("conv2d matches the sliding-window reference on random shapes") {
  Pcg32 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const int stride = 1 + static_cast<int>(rng.next_below(2));
    const int pad = static_cast<int>(rng.next_below(2));
    const int k = 1 + 2 * static_cast<int>(rng.next_below(2));
    const int h = 4 + static_cast<int>(rng.next_below(6));
    const int w = 4 + static_cast<int>(rng.next_below(6));
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    Tensor x = random_tensor({2, 3, h, w}, rng);
    ConvParams p = ConvParams::make(4, 3, k, k, stride, pad, true, rng);
    for (int64_t i = 0; i < p.bias.numel(); ++i)
      p.bias.data()[i] = rng.next_float() - 0.5f;
    Tensor got = conv2d(x, p);
    Tensor want = rgp::testing::conv2d_reference(x, p.weight, p.bias.data(),
                                                 stride, pad);
    REQUIRE(got.shape() == want.shape());
    for (int64_t i = 0; i < got.numel(); ++i)
      CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-4));
  }
}

TEST_CASE("conv2d output shape closed form over a sampled grid") {
  Pcg32 rng(5);
  for (int h = 6; h <= 14; h += 2) {
    for (int k = 1; k <= 5; k += 2) {
      for (int stride = 1; stride <= 3; ++stride) {
        for (int pad = 0; pad <= 2; ++pad) {
          if (h + 2 * pad < k) continue;
          Tensor x = Tensor::zeros({1, 1, h, h + 2});
          ConvParams p = ConvParams::make(1, 1, k, k, stride, pad, false, rng);
          Tensor y = conv2d(x, p);
          CHECK(y.dim(2) == (h + 2 * pad - k) / stride + 1);
          CHECK(y.dim(3) == (h + 2 + 2 * pad - k) / stride + 1);
        }
      }
    }
  }
}

TEST_CASE("deconv2d expands a single pixel into its kernel") {
  Tensor x = Tensor::from_values({1, 1, 1, 1}, {1.0f});
  ConvParams p;
  p.weight = Tensor::full({1, 1, 2, 2}, 1.0f);
  p.stride = 2;
  p.padding = 0;
  Tensor y = deconv2d(x, p);
  REQUIRE(y.shape() == std::vector<int>{1, 1, 2, 2});
  for (int64_t i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(1.0f));
}

TEST_CASE("deconv2d zero input gives zero output without bias") {
  Pcg32 rng(9);
  ConvParams p = ConvParams::make_deconv2x(3, 2, 2, /*with_bias=*/false, rng);
  Tensor x = Tensor::zeros({1, 2, 4, 4});
  Tensor y = deconv2d(x, p);
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == 0.0f);
}

TEST_CASE("deconv2d doubles 16x32 to 32x64 for kernels 2 and 4") {
  Pcg32 rng(13);
  for (int k : {2, 4}) {
    ConvParams p = ConvParams::make_deconv2x(2, 2, k, true, rng);
    Tensor x = random_tensor({1, 2, 16, 32}, rng);
    Tensor y = deconv2d(x, p);
    CHECK(y.shape() == std::vector<int>{1, 2, 32, 64});
  }
}

TEST_CASE("deconv2d rejects non-doubling geometry at construction") {
  Pcg32 rng(1);
  CHECK_THROWS_AS(ConvParams::make_deconv2x(1, 1, 3, true, rng), ValueError);
  CHECK_THROWS_AS(ConvParams::make_deconv2x(1, 1, 5, true, rng), ValueError);
}

TEST_CASE("batchnorm keeps an already normalized input") {
  Pcg32 rng(21);
  BatchNormState s = BatchNormState::make(2);
  s.training_mode = true;
  // Build per-channel zero-mean unit-variance data.
  Tensor x = random_tensor({4, 2, 5, 5}, rng);
  const int64_t hw = 25;
  for (int c = 0; c < 2; ++c) {
    double mean = 0, var = 0;
    for (int n = 0; n < 4; ++n)
      for (int64_t j = 0; j < hw; ++j) mean += x.data()[(n * 2 + c) * hw + j];
    mean /= 4 * hw;
    for (int n = 0; n < 4; ++n)
      for (int64_t j = 0; j < hw; ++j) {
        const double d = x.data()[(n * 2 + c) * hw + j] - mean;
        var += d * d;
      }
    var /= 4 * hw;
    const double inv = 1.0 / std::sqrt(var);
    for (int n = 0; n < 4; ++n)
      for (int64_t j = 0; j < hw; ++j) {
        float& v = x.data()[(n * 2 + c) * hw + j];
        v = static_cast<float>((v - mean) * inv);
      }
  }
  Tensor y = batchnorm2d(x, s);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4).scale(1.0));
}

TEST_CASE("batchnorm constant channel collapses to beta") {
  BatchNormState s = BatchNormState::make(1);
  s.training_mode = true;
  s.beta.data()[0] = 3.0f;
  Tensor x = Tensor::full({2, 1, 3, 3}, 7.0f);
  Tensor y = batchnorm2d(x, s);
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(3.0f).epsilon(1e-5));
}

TEST_CASE("batchnorm inference affine formula") {
  BatchNormState s = BatchNormState::make(1);
  s.training_mode = false;
  s.epsilon = 0.0f;
  s.running_mean.data()[0] = 1.0f;
  s.running_var.data()[0] = 4.0f;
  s.gamma.data()[0] = 2.0f;
  Tensor x = Tensor::full({1, 1, 1, 1}, 3.0f);
  Tensor y = batchnorm2d(x, s);
  CHECK(y.item() == doctest::Approx(2.0f));  // 2*(3-1)/sqrt(4)
}

TEST_CASE("batchnorm training mode rejects a single-value channel") {
  BatchNormState s = BatchNormState::make(1);
  s.training_mode = true;
  Tensor x = Tensor::full({1, 1, 1, 1}, 2.0f);
  CHECK_THROWS_AS(batchnorm2d(x, s), ValueError);
}

TEST_CASE("relu clamps below zero") {
  Tensor x = Tensor::from_values({1, 1, 1, 2}, {-2.0f, 3.0f});
  Tensor y = relu(x);
  CHECK(y.data()[0] == 0.0f);
  CHECK(y.data()[1] == 3.0f);
}

TEST_CASE("softmax of equal logits is uniform") {
  Tensor x = Tensor::full({1, 4, 2, 2}, 0.7f);
  Tensor p = softmax_channels(x);
  for (int64_t i = 0; i < p.numel(); ++i)
    CHECK(p.data()[i] == doctest::Approx(0.25f).epsilon(1e-6));
}

TEST_CASE("softmax channels sum to one on random logits") {
  Pcg32 rng(31);
  Tensor x = random_tensor({2, 5, 4, 4}, rng, 3.0);
  Tensor p = softmax_channels(x);
  const int64_t hw = 16;
  for (int n = 0; n < 2; ++n)
    for (int64_t j = 0; j < hw; ++j) {
      float acc = 0;
      for (int c = 0; c < 5; ++c) acc += p.data()[(n * 5 + c) * hw + j];
      CHECK(acc == doctest::Approx(1.0f).epsilon(1e-5));
      for (int c = 0; c < 5; ++c) CHECK(p.data()[(n * 5 + c) * hw + j] >= 0.0f);
    }
}

TEST_CASE("maxpool stride-1 dilates a one-hot plane by Chebyshev distance 1") {
  Tensor x = Tensor::zeros({1, 1, 7, 7});
  x.at({0, 0, 3, 3}) = 1.0f;
  Tensor y = maxpool2d(x, 3, 1);
  for (int yy = 0; yy < 7; ++yy)
    for (int xx = 0; xx < 7; ++xx) {
      const bool inside = std::abs(yy - 3) <= 1 && std::abs(xx - 3) <= 1;
      CHECK(y.at({0, 0, yy, xx}) == (inside ? 1.0f : 0.0f));
    }
}

TEST_CASE("maxpool stride-1 equals brute-force window max on random binary planes") {
  Pcg32 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = Tensor::zeros({1, 2, 9, 9});
    for (int64_t i = 0; i < x.numel(); ++i)
      x.data()[i] = rng.bernoulli(0.3) ? 1.0f : 0.0f;
    for (int k : {3, 5}) {
      Tensor got = maxpool2d(x, k, 1);
      Tensor want = rgp::testing::maxpool_same_reference(x, k);
      for (int64_t i = 0; i < got.numel(); ++i)
        CHECK(got.data()[i] == want.data()[i]);
    }
  }
}

TEST_CASE("maxpool rejects windows larger than the input") {
  Tensor x = Tensor::zeros({1, 1, 3, 3});
  CHECK_THROWS_AS(maxpool2d(x, 5, 2), ShapeError);
  CHECK_THROWS_AS(maxpool2d(x, 4, 1), ValueError);  // even k in same-size mode
}

TEST_CASE("bilinear resize is exact at identity size") {
  Pcg32 rng(19);
  Tensor x = random_tensor({1, 3, 6, 6}, rng);
  Tensor y = bilinear_resize(x, 6, 6);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("bilinear resize matches hand-computed 2x upsample of a 2x2 map") {
  Tensor x = Tensor::from_values({1, 1, 2, 2}, {0.0f, 1.0f, 2.0f, 3.0f});
  Tensor y = bilinear_resize(x, 4, 4);
  // Half-pixel centers: output x=0 maps to src -0.25 (clamped), x=1 to 0.25.
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(0.0f));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(0.25f));
  CHECK(y.at({0, 0, 0, 2}) == doctest::Approx(0.75f));
  CHECK(y.at({0, 0, 0, 3}) == doctest::Approx(1.0f));
  CHECK(y.at({0, 0, 1, 1}) == doctest::Approx(0.75f));
  CHECK(y.at({0, 0, 2, 2}) == doctest::Approx(2.25f));
}

TEST_CASE("forward passes are bit-identical across runs") {
  auto run = [] {
    Pcg32 rng(23);
    Tensor x = random_tensor({1, 3, 8, 8}, rng);
    ConvParams p = ConvParams::make(4, 3, 3, 3, 1, 1, true, rng);
    BatchNormState bn = BatchNormState::make(4);
    bn.training_mode = true;
    Tensor y = relu(batchnorm2d(conv2d(x, p), bn));
    return y;
  };
  Tensor a = run();
  Tensor b = run();
  REQUIRE(a.numel() == b.numel());
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}
