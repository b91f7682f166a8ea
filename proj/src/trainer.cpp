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
#include "rgp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "rgp/autograd.hpp"

namespace fs = std::filesystem;

namespace rgp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> shuffled_indices(int n, Pcg32& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(i + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

struct Batch {
  Tensor images;  // [B,3,H,W]
  std::vector<LabelMap> labels;
};

Batch assemble_batch(const std::vector<std::pair<Tensor, LabelMap>>& items) {
  const int b = static_cast<int>(items.size());
  const int h = items[0].second.height;
  const int w = items[0].second.width;
  for (const auto& [img, lm] : items) {
    RGP_CHECK_SHAPE(lm.height == h && lm.width == w,
                    "batch requires equal sample sizes (", lm.height, "x",
                    lm.width, " vs ", h, "x", w,
                    "); enable augmentation cropping for mixed-size corpora");
    RGP_CHECK_SHAPE(img.dim(1) == h && img.dim(2) == w,
                    "image/label size mismatch inside a batch");
  }
  Batch out;
  out.images = Tensor::zeros({b, 3, h, w});
  const int64_t img_len = static_cast<int64_t>(3) * h * w;
  for (int i = 0; i < b; ++i) {
    std::copy(items[static_cast<size_t>(i)].first.values().begin(),
              items[static_cast<size_t>(i)].first.values().end(),
              out.images.data() + i * img_len);
    out.labels.push_back(items[static_cast<size_t>(i)].second);
  }
  return out;
}

int64_t compute_total_iters(const TrainSchedule& sched, int n_train) {
  int64_t total = 0;
  for (int e = 0; e < sched.epochs; ++e) {
    const int batch = sched.effective_batch(e);
    total += (n_train + batch - 1) / batch;
  }
  return total;
}

}  // namespace

TrainingReport train_model(RgpNet& net, const SegmentationDataset& train_ds,
                           const SegmentationDataset* val_ds, const RunConfig& cfg,
                           const TrainOptions& opts) {
  cfg.validate();
  RGP_CHECK(!train_ds.items.empty(), "training dataset is empty");
  RGP_CHECK(train_ds.num_classes == cfg.network.num_classes,
            "dataset has ", train_ds.num_classes, " classes but the network has ",
            cfg.network.num_classes);

  TrainSchedule sched = cfg.schedule;
  const int n_train = static_cast<int>(train_ds.size());
  sched.total_iters = compute_total_iters(sched, n_train);

  if (!opts.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    RGP_CHECK_IO(fs::is_directory(opts.out_dir), "cannot create output directory '",
                 opts.out_dir, "'");
  }

  // Decode the corpus once; desk-scale corpora fit in memory.
  std::vector<Sample> cache;
  cache.reserve(train_ds.size());
  for (const auto& item : train_ds.items) cache.push_back(load_sample(item));

  SgdMomentum opt(sched.momentum, sched.weight_decay);
  opt.attach(net.parameters());

  Pcg32 rng(cfg.seed ^ 0x7261696e6c6f6fULL);
  int start_epoch = 0;
  int64_t iter = 0;

  if (!opts.resume_path.empty()) {
    Checkpoint ck = load_checkpoint(opts.resume_path);
    const RunConfig stored = RunConfig::from_json(nlohmann::json::parse(ck.config_json));
    RGP_CHECK(stored.canonical_string() == cfg.canonical_string(),
              "resume: checkpoint config does not match the requested config");
    load_into_net(ck, net, /*remap_head=*/false);
    std::map<std::string, const Tensor*> vel;
    for (const auto& [name, tensor] : ck.opt_state) vel[name] = &tensor;
    for (auto& [name, tensor] : opt.velocities()) {
      auto it = vel.find(name);
      RGP_CHECK(it != vel.end(), "resume: checkpoint is missing '", name, "'");
      RGP_CHECK_SHAPE(it->second->shape() == tensor.shape(),
                      "resume: '", name, "' shape mismatch");
      std::copy(it->second->values().begin(), it->second->values().end(),
                tensor.data());
    }
    rng.restore(ck.rng_state, ck.rng_inc);
    start_epoch = ck.epoch;
    iter = ck.iter;
    RGP_CHECK(start_epoch <= sched.epochs, "resume: checkpoint is at epoch ",
              start_epoch, " but the schedule ends at ", sched.epochs);
  }

  const std::string config_json = cfg.canonical_string();
  TrainingReport report;
  report.total_iters = sched.total_iters;
  report.theoretical_factor =
      sched.stages.empty() ? 1.0 : theoretical_cost_factor(sched.stages, sched.epochs);

  const LossOptions loss_opts = cfg.loss_options();
  double projected_full_seconds = 0.0;

  for (int epoch = start_epoch; epoch < sched.epochs; ++epoch) {
    if (opts.max_epochs_this_run > 0 &&
        epoch - start_epoch >= opts.max_epochs_this_run)
      break;
    const ResizeStage stage = sched.stage_at(epoch);
    const int batch_size = sched.effective_batch(epoch);
    net.set_training(true);

    const auto train_start = Clock::now();
    std::vector<int> order = shuffled_indices(n_train, rng);
    double loss_acc = 0.0;
    int64_t steps = 0;
    double lr_last = 0.0;

    for (int begin = 0; begin < n_train; begin += batch_size) {
      const int end = std::min(n_train, begin + batch_size);
      std::vector<std::pair<Tensor, LabelMap>> items;
      items.reserve(static_cast<size_t>(end - begin));
      for (int i = begin; i < end; ++i) {
        const Sample& s = cache[static_cast<size_t>(order[static_cast<size_t>(i)])];
        Tensor img = s.image;
        LabelMap lm = s.labels;
        if (stage.resize_factor != 1.0) {
          auto pair = resize_pair(img, lm, stage.resize_factor);
          img = pair.first;
          lm = pair.second;
        }
        if (cfg.augment.enabled) {
          AugmentConfig aug = cfg.augment;
          // Crop window shrinks with the stage so content coverage is stable.
          aug.crop_size = std::max(
              net.config().input_multiple(),
              static_cast<int>(std::lround(cfg.augment.crop_size * stage.resize_factor)));
          auto pair = augment(img, lm, aug, rng);
          img = pair.first;
          lm = pair.second;
        }
        items.emplace_back(std::move(img), std::move(lm));
      }
      Batch batch = assemble_batch(items);
      batch.images.set_requires_grad(false);

      float loss_value;
      {
        GradientTape tape;
        Tensor logits = net.forward(batch.images);
        Tensor loss = segmentation_loss(logits, batch.labels, loss_opts);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
          if (!opts.out_dir.empty()) {
            const std::string diag = (fs::path(opts.out_dir) / "diagnostic.rgpn").string();
            save_checkpoint(diag, snapshot_state(net, &opt.velocities(), rng,
                                                 epoch, iter, config_json));
            throw TrainDiverged(detail::format_msg(
                "non-finite loss ", loss_value, " at epoch ", epoch, " iter ", iter,
                "; diagnostic checkpoint written to ", diag));
          }
          throw TrainDiverged(detail::format_msg("non-finite loss ", loss_value,
                                                 " at epoch ", epoch, " iter ", iter));
        }
        opt.zero_grad();
        tape.backward(loss);
      }
      lr_last = poly_lr(iter, sched);
      opt.step(lr_last);
      ++iter;
      ++steps;
      loss_acc += loss_value;
      report.iteration_losses.push_back(loss_value);
    }
    const double train_seconds = seconds_since(train_start);

    EpochRow row;
    row.epoch = epoch;
    row.stage_factor = stage.resize_factor;
    row.lr_last = lr_last;
    row.loss_mean = steps > 0 ? loss_acc / static_cast<double>(steps) : 0.0;
    row.train_seconds = train_seconds;
    row.steps = steps;

    if (val_ds && opts.eval_every > 0 && ((epoch + 1) % opts.eval_every == 0 ||
                                          epoch + 1 == sched.epochs)) {
      net.set_training(false);
      row.val_miou = miou(evaluate_dataset(net, *val_ds));
    }
    report.rows.push_back(row);
    report.total_train_seconds += train_seconds;
    projected_full_seconds +=
        train_seconds / (stage.resize_factor * stage.resize_factor);

    if (!opts.quiet) {
      std::fprintf(stderr,
                   "epoch %3d  factor %.2f  steps %3lld  loss %.5f  miou %s  %.2fs\n",
                   epoch, stage.resize_factor, static_cast<long long>(steps),
                   row.loss_mean,
                   row.val_miou >= 0 ? std::to_string(row.val_miou).c_str() : "-",
                   train_seconds);
    }

    if (!opts.out_dir.empty() && opts.write_checkpoints) {
      Checkpoint ck = snapshot_state(net, &opt.velocities(), rng, epoch + 1, iter,
                                     config_json);
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%03d.rgpn", epoch);
      save_checkpoint((fs::path(opts.out_dir) / name).string(), ck);
      save_checkpoint((fs::path(opts.out_dir) / "latest.rgpn").string(), ck);
    }
  }

  report.measured_cost_ratio_vs_full =
      projected_full_seconds > 0.0
          ? report.total_train_seconds / projected_full_seconds
          : 1.0;
  if (!report.rows.empty()) report.final_val_miou = report.rows.back().val_miou;

  if (!opts.out_dir.empty() && opts.write_report)
    write_report_csv((fs::path(opts.out_dir) / "report.csv").string(), report);
  net.set_training(false);
  return report;
}

void write_report_csv(const std::string& path, const TrainingReport& report) {
  std::ofstream out(path, std::ios::trunc);
  RGP_CHECK_IO(out.good(), "cannot write report '", path, "'");
  out << "epoch,stage_factor,lr,loss,miou,seconds\n";
  char line[256];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%d,%.6g,%.8g,%.8g,%.6g,%.4f\n", r.epoch,
                  r.stage_factor, r.lr_last, r.loss_mean, r.val_miou,
                  r.train_seconds);
    out << line;
  }
}

ConfusionMatrix evaluate_dataset(RgpNet& net, const SegmentationDataset& ds,
                                 const std::vector<double>& scales, bool flip) {
  RGP_CHECK(!ds.items.empty(), "evaluation dataset is empty");
  RGP_CHECK(ds.num_classes == net.config().num_classes,
            "dataset has ", ds.num_classes, " classes but the checkpointed network has ",
            net.config().num_classes);
  const bool was_training = net.training();
  net.set_training(false);
  ConfusionMatrix cm(ds.num_classes);
  const bool single_scale = scales.size() == 1 && scales[0] == 1.0 && !flip;
  for (const auto& item : ds.items) {
    Sample s = load_sample(item);
    Tensor input = Tensor::from_values({1, 3, s.labels.height, s.labels.width},
                                       s.image.values());
    Tensor scores;
    if (single_scale) {
      scores = net.forward(input);
    } else {
      scores = multi_scale_eval([&net](const Tensor& x) { return net.forward(x); },
                                input, scales, flip,
                                net.config().input_multiple());
    }
    cm.accumulate(argmax_labels(scores, 0), s.labels);
  }
  net.set_training(was_training);
  return cm;
}

BenchReport run_benchmark(RgpNet& net, int height, int width, int iters,
                          int warmup) {
  RGP_CHECK(iters >= 1, "bench: iters must be >= 1, got ", iters);
  RGP_CHECK(warmup >= 0, "bench: warmup must be >= 0, got ", warmup);
  net.set_training(false);

  Pcg32 rng(42);
  Tensor input = Tensor::zeros({1, 3, height, width});
  for (int64_t i = 0; i < input.numel(); ++i)
    input.data()[i] = rng.next_float();

  BenchReport report;
  report.height = height;
  report.width = width;
  report.warmup = warmup;
  report.iters = iters;
  report.params = count_parameters(net.config());

  for (int i = 0; i < warmup; ++i) net.forward(input);

  std::vector<std::pair<std::string, double>> layer_acc;
  const auto t0 = Clock::now();
  for (int i = 0; i < iters; ++i) {
    ForwardTrace trace;
    net.forward(input, &trace, /*profile=*/true);
    if (layer_acc.empty()) {
      layer_acc = trace.layer_ms;
    } else {
      for (size_t j = 0; j < layer_acc.size(); ++j)
        layer_acc[j].second += trace.layer_ms[j].second;
    }
  }
  const double elapsed = seconds_since(t0);
  report.fps = iters / elapsed;
  for (auto& [name, ms] : layer_acc) report.layer_ms.emplace_back(name, ms / iters);
  return report;
}

std::string format_bench_report(const BenchReport& r) {
  std::ostringstream os;
  char line[160];
  os << "size,params,params_m,fps,iters,warmup\n";
  std::snprintf(line, sizeof(line), "%dx%d,%lld,%.3f,%.3f,%d,%d\n", r.height,
                r.width, static_cast<long long>(r.params),
                static_cast<double>(r.params) / 1e6, r.fps, r.iters, r.warmup);
  os << line;
  os << "layer,mean_ms\n";
  for (const auto& [name, ms] : r.layer_ms) {
    std::snprintf(line, sizeof(line), "%s,%.4f\n", name.c_str(), ms);
    os << line;
  }
  return os.str();
}

}  // namespace rgp
