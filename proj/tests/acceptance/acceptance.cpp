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
//
// End-to-end verification: one pass/fail line per criterion. Heavy
// experiments (progressive-resizing timing, paired trainings) are run once
// and shared between criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rgp/checkpoint.hpp"
#include "rgp/config.hpp"
#include "rgp/data.hpp"
#include "rgp/losses.hpp"
#include "rgp/metrics.hpp"
#include "rgp/net.hpp"
#include "rgp/trainer.hpp"
#include "support/grad_check.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace rgp;
using rgp::testing::check_gradients;
using rgp::testing::FdSettings;
using rgp::testing::random_tensor;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path workspace() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rgpnet_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---------------------------------------------------------------------------
// Shared experiment recipes.

RunConfig desk_config(int epochs, LossMode mode, double lr = 0.06,
                      uint64_t seed = 42) {
  RunConfig cfg;
  cfg.network.num_classes = 4;  // desk channels [16,32,64,128] are defaults
  cfg.schedule.epochs = epochs;
  cfg.schedule.batch_size = 8;
  cfg.schedule.base_lr = lr;
  cfg.loss_mode = mode;
  cfg.relax_enabled = loss_mode_uses_relax(mode);
  cfg.augment.enabled = true;
  cfg.augment.crop_size = 64;
  cfg.augment.scale_min = cfg.augment.scale_max = 1.0;
  cfg.augment.hflip_prob = 0.5;
  cfg.seed = seed;
  return cfg;
}

// Progressive-resizing experiment at 128x128 (a 1/4 stage needs inputs that
// stay divisible by 32). 15 epochs split 9/3/3 like the timing experiment.
struct ProgressiveLab {
  SegmentationDataset train;
  SegmentationDataset val;
  std::optional<TrainingReport> full_ce;
  std::optional<TrainingReport> prog_relax;
  std::optional<TrainingReport> prog_plain;
  RgpNet* net_prog_relax = nullptr;
  RgpNet* net_prog_plain = nullptr;

  static ProgressiveLab& instance() {
    static ProgressiveLab lab = [] {
      ProgressiveLab l;
      l.train = generate_synthetic(48, 128, 128, 4, 7101,
                                   (workspace() / "prog_train").string());
      l.val = generate_synthetic(24, 128, 128, 4, 7202,
                                 (workspace() / "prog_val").string());
      return l;
    }();
    return lab;
  }

  static RunConfig config(bool progressive, LossMode mode) {
    RunConfig cfg;
    cfg.network.num_classes = 4;
    cfg.schedule.epochs = 15;
    cfg.schedule.batch_size = 2;
    cfg.schedule.max_batch_size = 64;
    cfg.schedule.base_lr = 0.04;
    if (progressive)
      cfg.schedule.stages = {{0, 0.25, 16}, {9, 0.5, 4}, {12, 1.0, 1}};
    cfg.loss_mode = mode;
    cfg.relax_enabled = loss_mode_uses_relax(mode);
    cfg.augment.enabled = true;
    cfg.augment.crop_size = 128;
    cfg.augment.scale_min = cfg.augment.scale_max = 1.0;
    cfg.augment.hflip_prob = 0.5;
    cfg.seed = 77;
    return cfg;
  }

  const TrainingReport& run(const char* which) {
    TrainOptions opts;
    opts.quiet = true;
    opts.eval_every = 0;
    if (std::string(which) == "full_ce") {
      if (!full_ce) {
        RgpNet net(config(false, LossMode::kCe).network, 77);
        full_ce = train_model(net, train, nullptr, config(false, LossMode::kCe), opts);
      }
      return *full_ce;
    }
    if (std::string(which) == "prog_relax") {
      if (!prog_relax) {
        static RgpNet net(config(true, LossMode::kCeRelax).network, 77);
        prog_relax = train_model(net, train, nullptr,
                                 config(true, LossMode::kCeRelax), opts);
        net_prog_relax = &net;
      }
      return *prog_relax;
    }
    if (!prog_plain) {
      static RgpNet net(config(true, LossMode::kCe).network, 77);
      prog_plain = train_model(net, train, nullptr, config(true, LossMode::kCe), opts);
      net_prog_plain = &net;
    }
    return *prog_plain;
  }
};

// ---------------------------------------------------------------------------
// 1. Gradient integrity.

bool criterion_gradients(std::string& detail) {
  const auto t0 = Clock::now();
  Pcg32 rng(11);
  FdSettings fd;
  fd.max_elements = 24;
  std::vector<std::pair<std::string, double>> results;
  auto record = [&](const std::string& name, const std::function<Tensor()>& loss,
                    Tensor target) {
    auto rep = check_gradients(loss, std::move(target), rng, fd);
    results.emplace_back(name, rep.max_scaled_err);
  };

  {  // conv2d
    Tensor x = random_tensor({2, 3, 6, 6}, rng, 0.7);
    ConvParams p = ConvParams::make(4, 3, 3, 3, 2, 1, true, rng);
    auto loss = [&] { return sum(relu(conv2d(x, p))); };
    record("conv2d/x", loss, x);
    record("conv2d/w", loss, p.weight);
    record("conv2d/b", loss, p.bias);
  }
  {  // deconv2d
    Tensor x = random_tensor({1, 3, 5, 5}, rng, 0.7);
    ConvParams p = ConvParams::make_deconv2x(2, 3, 2, true, rng);
    auto loss = [&] { return sum(relu(deconv2d(x, p))); };
    record("deconv2d/x", loss, x);
    record("deconv2d/w", loss, p.weight);
  }
  {  // batchnorm (training statistics path)
    Tensor x = random_tensor({3, 2, 4, 4}, rng);
    BatchNormState s = BatchNormState::make(2);
    s.training_mode = true;
    auto loss = [&] { return sum(relu(batchnorm2d(x, s))); };
    record("batchnorm/x", loss, x);
    record("batchnorm/gamma", loss, s.gamma);
    record("batchnorm/beta", loss, s.beta);
  }
  {  // transfer
    Transfer t = Transfer::make(8, 2, true, rng);
    t.bn.training_mode = true;
    Tensor x = random_tensor({2, 8, 3, 3}, rng);
    auto loss = [&] { return sum(t.forward(x)); };
    record("transfer/x", loss, x);
    record("transfer/w", loss, t.conv.weight);
    record("transfer/bias", loss, t.conv.bias);
    record("transfer/gamma", loss, t.bn.gamma);
  }
  {  // adaptor at interior / deepest / shallowest positions
    ConvParams down = ConvParams::make(2, 2, 3, 3, 2, 1, true, rng);
    ConvParams up = ConvParams::make_deconv2x(2, 2, 2, true, rng);
    Tensor t_prev = random_tensor({1, 2, 8, 8}, rng);
    Tensor t_cur = random_tensor({1, 2, 4, 4}, rng);
    Tensor d_next = random_tensor({1, 2, 2, 2}, rng);
    auto interior = [&] {
      return sum(relu(adaptor_fuse(&t_prev, t_cur, &d_next, &down, &up)));
    };
    record("adaptor.interior/t_prev", interior, t_prev);
    record("adaptor.interior/t_cur", interior, t_cur);
    record("adaptor.interior/d_next", interior, d_next);
    record("adaptor.interior/down_w", interior, down.weight);
    record("adaptor.interior/up_w", interior, up.weight);
    auto deepest = [&] {
      return sum(relu(adaptor_fuse(&t_prev, t_cur, nullptr, &down, nullptr)));
    };
    record("adaptor.deepest/t_prev", deepest, t_prev);
    record("adaptor.deepest/t_cur", deepest, t_cur);
    auto shallowest = [&] {
      return sum(relu(adaptor_fuse(nullptr, t_cur, &d_next, nullptr, &up)));
    };
    record("adaptor.shallowest/t_cur", shallowest, t_cur);
    record("adaptor.shallowest/d_next", shallowest, d_next);
  }
  {  // shared-weight decoder block
    DecoderBlock blk = DecoderBlock::make(3, rng);
    blk.bn1.training_mode = true;
    blk.bn2.training_mode = true;
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    auto loss = [&] { return sum(blk.forward(x)); };
    record("decoder/shared_w", loss, blk.conv.weight);
    record("decoder/x", loss, x);
  }
  {  // losses
    Pcg32 lrng(3);
    Tensor logits = random_tensor({1, 3, 6, 6}, rng, 1.2);
    LabelMap lm(6, 6);
    for (auto& v : lm.labels) v = static_cast<uint8_t>(lrng.next_below(3));
    std::vector<LabelMap> lms = {lm};
    for (LossMode mode : {LossMode::kCe, LossMode::kOhem, LossMode::kCeRelax}) {
      LossOptions o;
      o.mode = mode;
      o.ohem.theta = 0.6;
      o.ohem.min_kept = 5;
      auto loss = [&] { return segmentation_loss(logits, lms, o); };
      record(std::string("loss/") + loss_mode_to_string(mode), loss, logits);
    }
  }
  {  // end-to-end 2-level micro network
    NetworkConfig cfg;
    cfg.num_levels = 2;
    cfg.encoder_channels = {8, 8};
    cfg.num_classes = 3;
    cfg.encoder_blocks_per_level = 1;
    RgpNet net(cfg, 41);
    net.set_training(true);
    Pcg32 drng(43);
    Tensor img = random_tensor({2, 3, 8, 8}, drng, 0.5);
    LabelMap lm(8, 8);
    for (auto& v : lm.labels) v = static_cast<uint8_t>(drng.next_below(3));
    std::vector<LabelMap> lms = {lm, lm};
    auto loss = [&] { return cross_entropy(net.forward(img), lms); };
    FdSettings e2e = fd;
    e2e.max_elements = 6;
    record("micro/input", loss, img);
    int param_checks = 0;
    for (auto& [name, p] : net.parameters()) {
      auto rep = check_gradients(loss, p, rng, e2e);
      results.emplace_back("micro/" + name, rep.max_scaled_err);
      ++param_checks;
    }
    if (param_checks < 20) {
      detail = "micro network exposed too few parameters";
      return false;
    }
  }

  double worst = 0;
  std::string worst_name;
  for (auto& [name, err] : results) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << results.size() << " checks, worst rel err " << worst << " (" << worst_name
     << "), " << elapsed << "s";
  detail = os.str();
  return worst < 1e-2 && elapsed < 120.0;
}

// ---------------------------------------------------------------------------
// 2. Adaptor fusion structure on scalar branches.

bool criterion_adaptor_structure(std::string& detail) {
  Pcg32 rng(5);
  ConvParams down = ConvParams::make(1, 1, 3, 3, 2, 1, false, rng);
  for (int64_t i = 0; i < 9; ++i) down.weight.data()[i] = 0.0f;
  down.weight.data()[4] = 1.0f;  // center tap: exact subsampling
  ConvParams up = ConvParams::make_deconv2x(1, 1, 2, false, rng);
  for (int64_t i = 0; i < 4; ++i) up.weight.data()[i] = 1.0f;  // exact copy

  const float a = 2.0f, b = 3.0f, c = 5.0f;
  Tensor t_prev = Tensor::full({1, 1, 4, 4}, a);
  Tensor t_cur = Tensor::full({1, 1, 2, 2}, b);
  Tensor d_next = Tensor::full({1, 1, 1, 1}, c);

  Tensor interior = adaptor_fuse(&t_prev, t_cur, &d_next, &down, &up);
  Tensor deepest = adaptor_fuse(&t_prev, t_cur, nullptr, &down, nullptr);
  Tensor shallowest = adaptor_fuse(nullptr, t_cur, &d_next, nullptr, &up);
  for (int64_t i = 0; i < 4; ++i) {
    if (interior.data()[i] != a + b + c) {
      detail = "interior sum mismatch";
      return false;
    }
    if (deepest.data()[i] != a + b) {
      detail = "deepest level failed to drop exactly the upsample term";
      return false;
    }
    if (shallowest.data()[i] != b + c) {
      detail = "shallowest level failed to drop exactly the downsample term";
      return false;
    }
  }
  detail = "D+T+U = a+b+c exactly; boundary levels drop exactly one term";
  return true;
}

// ---------------------------------------------------------------------------
// 3. Border detector vs brute force.

bool criterion_border_oracle(std::string& detail) {
  Pcg32 rng(71);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(rng.next_below(4));  // <= 5
    LabelMap lm(16, 16);
    for (auto& v : lm.labels)
      v = rng.bernoulli(0.05) ? kIgnoreLabel
                              : static_cast<uint8_t>(rng.next_below(classes));
    for (int k : {3, 5}) {
      BorderMask got = detect_borders(lm, k, classes);
      auto want = rgp::testing::border_bruteforce(lm, k);
      for (int64_t j = 0; j < lm.size(); ++j) {
        if (got.border[static_cast<size_t>(j)] != want.border[static_cast<size_t>(j)]) {
          detail = "border mismatch at trial " + std::to_string(trial);
          return false;
        }
        for (int c = 0; c < classes; ++c) {
          const bool in_got = got.multihot[static_cast<size_t>(c) * lm.size() + j] != 0;
          if (in_got != (want.window_sets[static_cast<size_t>(j)].count(c) > 0)) {
            detail = "window-set mismatch at trial " + std::to_string(trial);
            return false;
          }
        }
      }
      ++checked;
    }
  }
  detail = std::to_string(checked) + " map/kernel pairs, exact equality";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Label relaxation dominance.

bool criterion_relaxation_dominance(std::string& detail) {
  Pcg32 rng(13);
  int equal_cases = 0, strict_cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int classes = 2 + static_cast<int>(rng.next_below(5));
    Tensor logits = random_tensor({1, classes, 1, 1}, rng, 2.5);
    const uint8_t y = static_cast<uint8_t>(rng.next_below(classes));
    LabelMap lm(1, 1, y);
    std::vector<LabelMap> lms = {lm};

    BorderMask mask;
    mask.height = mask.width = 1;
    mask.num_classes = classes;
    mask.border.assign(1, 1);
    mask.multihot.assign(static_cast<size_t>(classes), 0);
    mask.multihot[y] = 1;
    int extra = 0;
    for (int c = 0; c < classes; ++c) {
      if (c != y && rng.bernoulli(0.4)) {
        mask.multihot[static_cast<size_t>(c)] = 1;
        ++extra;
      }
    }
    std::vector<BorderMask> masks = {mask};
    const float relaxed = label_relaxation_loss(logits, lms, masks).item();
    const float ce = cross_entropy(logits, lms).item();
    if (extra == 0) {
      if (relaxed != ce) {
        detail = "singleton window set did not reduce to the CE term";
        return false;
      }
      ++equal_cases;
    } else {
      if (!(relaxed < ce)) {
        detail = "relaxed loss not strictly below CE with a non-trivial set";
        return false;
      }
      ++strict_cases;
    }
  }
  detail = std::to_string(strict_cases) + " strict, " +
           std::to_string(equal_cases) + " singleton-equal of 1000";
  return equal_cases > 0 && strict_cases > 0;
}

// ---------------------------------------------------------------------------
// 5. OHEM keep-set oracle.

bool criterion_ohem_oracle(std::string& detail) {
  Pcg32 rng(80);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 20 + static_cast<int>(rng.next_below(200));
    std::vector<float> probs(static_cast<size_t>(n));
    std::vector<uint8_t> valid(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      probs[static_cast<size_t>(i)] = rng.next_float();
      valid[static_cast<size_t>(i)] = rng.bernoulli(0.85) ? 1 : 0;
    }
    const double theta = 0.2 + 0.6 * rng.next_double();
    const int64_t min_kept = 1 + rng.next_below(n);
    if (ohem_keep_mask(probs, valid, theta, min_kept) !=
        rgp::testing::ohem_bruteforce(probs, valid, theta, min_kept)) {
      detail = "keep mask diverged from the sort oracle at trial " +
               std::to_string(trial);
      return false;
    }
  }
  OhemConfig defaults;
  RunConfig cfg;
  const auto j = cfg.to_json();
  const bool defaults_ok = defaults.theta == 0.6 && defaults.min_kept == 5000 &&
                           j["ohem"]["theta"].get<double>() == 0.6 &&
                           j["ohem"]["min_kept"].get<int64_t>() == 5000;
  detail = "200 instances exact; defaults theta=0.6 min_kept=5000";
  return defaults_ok;
}

// ---------------------------------------------------------------------------
// 6. Poly LR closed form.

bool criterion_poly_lr(std::string& detail) {
  TrainSchedule sched;
  sched.base_lr = 1e-3;
  sched.power = 0.9;
  sched.total_iters = 1000;
  double worst = 0;
  for (int64_t it : {int64_t(0), int64_t(250), int64_t(500), int64_t(750),
                     int64_t(1000)}) {
    const double t = static_cast<double>(it) / 1000.0;
    const double want = 1e-3 * std::pow(1.0 - t, 0.9);
    worst = std::max(worst, std::abs(poly_lr(it, sched) - want));
  }
  std::ostringstream os;
  os << "max deviation " << worst << " over {0, T/4, T/2, 3T/4, T}";
  detail = os.str();
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 7. Progressive-resizing cost: exact factor + measured wall-clock ratio.

bool criterion_progressive_cost(std::string& detail) {
  const std::vector<ResizeStage> paper_stages = {{0, 0.25, 16}, {9, 0.5, 4},
                                                 {12, 1.0, 1}};
  const double factor = theoretical_cost_factor(paper_stages, 15);
  if (std::abs(factor - 0.2875) > 1e-12) {
    detail = "theoretical factor " + std::to_string(factor) + " != 0.2875";
    return false;
  }
  const auto t0 = Clock::now();
  ProgressiveLab& lab = ProgressiveLab::instance();
  const TrainingReport& full = lab.run("full_ce");
  const TrainingReport& prog = lab.run("prog_relax");
  const double ratio = prog.total_train_seconds / full.total_train_seconds;
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "factor 0.2875 exact; measured ratio " << ratio << " (prog "
     << prog.total_train_seconds << "s / full " << full.total_train_seconds
     << "s), wall " << elapsed << "s";
  detail = os.str();
  return ratio >= 0.25 && ratio <= 0.45 && elapsed < 1800.0;
}

// ---------------------------------------------------------------------------
// 8. Convergence of the desk configuration.

bool criterion_convergence(std::string& detail) {
  SegmentationDataset train = generate_synthetic(
      200, 64, 64, 4, 1001, (workspace() / "conv_train").string());
  SegmentationDataset val = generate_synthetic(
      50, 64, 64, 4, 2002, (workspace() / "conv_val").string());
  RunConfig cfg = desk_config(30, LossMode::kOhemRelax);
  RgpNet net(cfg.network, cfg.seed);
  TrainOptions opts;
  opts.quiet = true;
  opts.eval_every = 1;
  TrainingReport rep = train_model(net, train, &val, cfg, opts);

  double best = -1;
  int best_epoch = -1;
  for (const auto& row : rep.rows) {
    if (row.val_miou > best) {
      best = row.val_miou;
      best_epoch = row.epoch;
    }
  }
  // 5-epoch moving windows of the loss must not increase (1e-4 slack).
  bool monotone = true;
  std::vector<double> windows;
  for (size_t i = 0; i + 5 <= rep.rows.size(); ++i) {
    double acc = 0;
    for (size_t j = i; j < i + 5; ++j) acc += rep.rows[j].loss_mean;
    windows.push_back(acc / 5.0);
  }
  for (size_t i = 1; i < windows.size(); ++i)
    if (windows[i] > windows[i - 1] + 1e-4) monotone = false;

  std::ostringstream os;
  os << "best val mIoU " << best << " at epoch " << best_epoch
     << (monotone ? "; smoothed loss non-increasing" : "; smoothed loss INCREASED");
  detail = os.str();
  return best >= 0.85 && monotone;
}

// ---------------------------------------------------------------------------
// 9. Boundary-entropy direction of label relaxation.

bool criterion_entropy_direction(std::string& detail) {
  ProgressiveLab& lab = ProgressiveLab::instance();
  lab.run("prog_relax");
  lab.run("prog_plain");
  RgpNet& relax_net = *lab.net_prog_relax;
  RgpNet& plain_net = *lab.net_prog_plain;
  relax_net.set_training(false);
  plain_net.set_training(false);

  int lower = 0, total = 0;
  for (const auto& item : lab.val.items) {
    Sample s = load_sample(item);
    BorderMask mask = detect_borders(s.labels, 3, lab.val.num_classes);
    if (mask.border_count() == 0) continue;
    Tensor input = Tensor::from_values({1, 3, s.labels.height, s.labels.width},
                                       s.image.values());
    Tensor h_relax = entropy_map(relax_net.forward(input));
    Tensor h_plain = entropy_map(plain_net.forward(input));
    double mean_relax = 0, mean_plain = 0;
    int64_t count = 0;
    for (int64_t j = 0; j < s.labels.size(); ++j) {
      if (!mask.border[static_cast<size_t>(j)]) continue;
      mean_relax += h_relax.data()[j];
      mean_plain += h_plain.data()[j];
      ++count;
    }
    if (count == 0) continue;
    ++total;
    if (mean_relax < mean_plain) ++lower;
  }
  std::ostringstream os;
  os << lower << "/" << total << " validation images with lower boundary entropy";
  detail = os.str();
  return total > 0 && static_cast<double>(lower) / total >= 0.70;
}

// ---------------------------------------------------------------------------
// 10. Downsampling-connection ablation direction.

bool criterion_ds_ablation(std::string& detail) {
  SegmentationDataset train = generate_synthetic(
      160, 64, 64, 4, 5001, (workspace() / "ds_train").string());
  SegmentationDataset val = generate_synthetic(
      50, 64, 64, 4, 6002, (workspace() / "ds_val").string());
  int wins = 0;
  std::ostringstream os;
  double mean_on = 0, mean_off = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    double miou_on = 0, miou_off = 0;
    for (bool ds : {true, false}) {
      RunConfig cfg = desk_config(24, LossMode::kCe, 0.06, seed);
      RgpNet net(cfg.network, cfg.seed);
      // Same initialization; the off arm runs with the D paths severed.
      net.set_adaptor_paths(ds, true);
      TrainOptions opts;
      opts.quiet = true;
      opts.eval_every = 0;
      train_model(net, train, nullptr, cfg, opts);
      net.set_training(false);
      (ds ? miou_on : miou_off) = miou(evaluate_dataset(net, val));
    }
    mean_on += miou_on / 10;
    mean_off += miou_off / 10;
    if (miou_on >= miou_off) ++wins;
    std::fprintf(stderr, "  [10] seed %llu: DS-on %.4f DS-off %.4f\n",
                 static_cast<unsigned long long>(seed), miou_on, miou_off);
  }
  os << wins << "/10 seeds with DS-on >= DS-off (means " << mean_on << " vs "
     << mean_off << ")";
  detail = os.str();
  return wins >= 7;
}

// ---------------------------------------------------------------------------
// 11. Parameter accounting.

bool criterion_parameter_accounting(std::string& detail) {
  Pcg32 rng(3);
  DecoderBlock shared = DecoderBlock::make(8, rng);
  ResidualBlock unshared = ResidualBlock::make(8, rng);
  const int64_t shared_conv = shared.conv.weight.numel();
  const int64_t unshared_conv =
      unshared.conv1.weight.numel() + unshared.conv2.weight.numel();
  if (2 * shared_conv != unshared_conv) {
    detail = "shared block is not exactly half the unshared conv parameters";
    return false;
  }

  RunConfig cfg;
  cfg.network.num_classes = 4;
  RgpNet net(cfg.network, 9);
  int64_t enumerated = 0;
  for (auto& [name, p] : net.parameters()) {
    (void)name;
    enumerated += p.numel();
  }
  const int64_t counted = count_parameters(cfg.network);

  // Checkpoint route: parameter tensors stored in the archive must enumerate
  // to the same count.
  const fs::path path = workspace() / "params.rgpn";
  Pcg32 rng2(1);
  save_checkpoint(path.string(),
                  snapshot_state(net, nullptr, rng2, 0, 0, cfg.canonical_string()));
  Checkpoint ck = load_checkpoint(path.string());
  int64_t from_checkpoint = 0;
  for (const auto& [name, tensor] : ck.tensors) {
    if (name.find(".running_") == std::string::npos)
      from_checkpoint += tensor.numel();
  }
  std::ostringstream os;
  os << "closed form " << counted << " == enumerated " << enumerated
     << " == checkpoint " << from_checkpoint << "; shared conv " << shared_conv
     << " = half of " << unshared_conv;
  detail = os.str();
  return counted == enumerated && counted == from_checkpoint;
}

// ---------------------------------------------------------------------------
// 12. Checkpoint round-trip and bit-exact resume.

bool criterion_checkpoint_roundtrip(std::string& detail) {
  SegmentationDataset ds = generate_synthetic(
      12, 32, 32, 3, 99, (workspace() / "resume_data").string());
  RunConfig cfg;
  cfg.network.num_levels = 4;
  cfg.network.encoder_channels = {8, 16, 32, 64};
  cfg.network.num_classes = 3;
  cfg.network.encoder_blocks_per_level = 1;
  cfg.schedule.epochs = 3;
  cfg.schedule.batch_size = 4;
  cfg.schedule.base_lr = 0.03;
  cfg.augment.enabled = false;
  cfg.seed = 5;

  // Byte-identical save -> load -> save.
  RgpNet probe(cfg.network, cfg.seed);
  Pcg32 rng(7);
  const fs::path a = workspace() / "rt_a.rgpn";
  const fs::path b = workspace() / "rt_b.rgpn";
  save_checkpoint(a.string(),
                  snapshot_state(probe, nullptr, rng, 1, 10, cfg.canonical_string()));
  save_checkpoint(b.string(), load_checkpoint(a.string()));
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  if (ba != bb || ba.empty()) {
    detail = "save -> load -> save changed the file bytes";
    return false;
  }

  // Interrupted-and-resumed losses equal the unbroken run bit for bit.
  TrainOptions full_opts;
  full_opts.out_dir = (workspace() / "resume_full").string();
  full_opts.quiet = true;
  full_opts.eval_every = 0;
  RgpNet net_full(cfg.network, cfg.seed);
  TrainingReport full = train_model(net_full, ds, nullptr, cfg, full_opts);

  TrainOptions part_opts;
  part_opts.out_dir = (workspace() / "resume_part").string();
  part_opts.quiet = true;
  part_opts.eval_every = 0;
  part_opts.max_epochs_this_run = 2;
  RgpNet net_part(cfg.network, cfg.seed);
  train_model(net_part, ds, nullptr, cfg, part_opts);

  TrainOptions resume_opts;
  resume_opts.out_dir = (workspace() / "resume_tail").string();
  resume_opts.resume_path =
      (workspace() / "resume_part" / "ckpt_epoch_001.rgpn").string();
  resume_opts.quiet = true;
  resume_opts.eval_every = 0;
  RgpNet net_resume(cfg.network, cfg.seed);
  TrainingReport tail = train_model(net_resume, ds, nullptr, cfg, resume_opts);

  const size_t steps = full.iteration_losses.size() / 3;
  if (tail.iteration_losses.size() != steps || steps < 3) {
    detail = "resumed run produced an unexpected number of iterations";
    return false;
  }
  for (size_t i = 0; i < steps; ++i) {
    if (tail.iteration_losses[i] != full.iteration_losses[2 * steps + i]) {
      detail = "resumed losses diverged at iteration " + std::to_string(i);
      return false;
    }
  }
  std::ostringstream os;
  os << "file bytes stable; " << steps << " resumed iterations bit-identical";
  detail = os.str();
  return true;
}

// ---------------------------------------------------------------------------
// 13. Benchmark sanity.

bool criterion_bench(std::string& detail) {
  RunConfig cfg;
  cfg.network.num_classes = 4;
  RgpNet net(cfg.network, 17);
  std::vector<double> fps;
  for (int size : {64, 128, 256}) {
    BenchReport rep = run_benchmark(net, size, size, 5, 2);
    fps.push_back(rep.fps);
    if (size == 64) {
      const std::string text = format_bench_report(rep);
      if (text.find("params") == std::string::npos ||
          text.find("fps") == std::string::npos ||
          text.find("layer,mean_ms") == std::string::npos) {
        detail = "report format lacks params/fps/per-layer columns";
        return false;
      }
    }
  }
  std::ostringstream os;
  os << "fps " << fps[0] << " > " << fps[1] << " > " << fps[2]
     << " across 64/128/256";
  detail = os.str();
  return fps[0] > fps[1] && fps[1] > fps[2];
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "gradient integrity (finite differences)", criterion_gradients},
      {2, "adaptor fusion structure", criterion_adaptor_structure},
      {3, "border detector equals brute force", criterion_border_oracle},
      {4, "label relaxation dominance", criterion_relaxation_dominance},
      {5, "OHEM keep-set oracle and defaults", criterion_ohem_oracle},
      {6, "poly learning-rate closed form", criterion_poly_lr},
      {7, "progressive-resizing cost factor and measured ratio",
       criterion_progressive_cost},
      {8, "desk-scale convergence (OHEM + relaxation)", criterion_convergence},
      {9, "boundary entropy lower with relaxation", criterion_entropy_direction},
      {10, "downsampling-connection ablation direction", criterion_ds_ablation},
      {11, "parameter accounting with shared decoder", criterion_parameter_accounting},
      {12, "checkpoint round-trip and bit-exact resume", criterion_checkpoint_roundtrip},
      {13, "benchmark FPS monotonicity and report shape", criterion_bench},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (auto& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    std::string detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double elapsed = seconds_since(t0);
    std::printf("[%2d] %s  %s (%s) [%.1fs]\n", c.id, ok ? "PASS" : "FAIL",
                c.name, detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
