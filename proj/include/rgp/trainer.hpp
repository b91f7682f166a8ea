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
#ifndef RGP_TRAINER_HPP_
#define RGP_TRAINER_HPP_

#include <string>
#include <vector>

#include "rgp/checkpoint.hpp"
#include "rgp/config.hpp"
#include "rgp/data.hpp"
#include "rgp/metrics.hpp"
#include "rgp/net.hpp"
#include "rgp/train.hpp"

namespace rgp {

struct EpochRow {
  int epoch = 0;
  double stage_factor = 1.0;
  double lr_last = 0.0;
  double loss_mean = 0.0;
  double val_miou = -1.0;  // -1 when not evaluated
  double train_seconds = 0.0;
  int64_t steps = 0;
};

struct TrainingReport {
  std::vector<EpochRow> rows;
  std::vector<float> iteration_losses;
  int64_t total_iters = 0;
  double total_train_seconds = 0.0;
  double theoretical_factor = 1.0;
  /// total seconds / a full-scale projection (sum of epoch seconds scaled by
  /// 1/factor^2); a measured proxy for the progressive-resizing saving.
  double measured_cost_ratio_vs_full = 1.0;
  double final_val_miou = -1.0;
};

struct TrainOptions {
  std::string out_dir;      // empty: keep everything in memory only
  std::string resume_path;  // empty: fresh start
  bool write_checkpoints = true;
  bool write_report = true;
  int eval_every = 1;  // epochs between validation passes; 0 disables
  bool quiet = false;  // suppress per-epoch stderr progress
  int max_epochs_this_run = 0;  // 0 = run to the schedule's end; otherwise
                                // stop after this many epochs (interruption)
};

/// Stage-aware training loop: per-epoch resize factor and batch scale, poly
/// learning rate per iteration, per-epoch checkpoint and report row. Aborts
/// with a diagnostic checkpoint on a non-finite loss.
TrainingReport train_model(RgpNet& net, const SegmentationDataset& train_ds,
                           const SegmentationDataset* val_ds, const RunConfig& cfg,
                           const TrainOptions& opts);

void write_report_csv(const std::string& path, const TrainingReport& report);

/// Single-scale (or multi-scale + flip) evaluation over a dataset.
ConfusionMatrix evaluate_dataset(RgpNet& net, const SegmentationDataset& ds,
                                 const std::vector<double>& scales = {1.0},
                                 bool flip = false);

struct BenchReport {
  int height = 0;
  int width = 0;
  int warmup = 0;
  int iters = 0;
  int64_t params = 0;
  double fps = 0.0;
  std::vector<std::pair<std::string, double>> layer_ms;
};

/// Forward-only timing at batch size 1; warmup passes are excluded.
BenchReport run_benchmark(RgpNet& net, int height, int width, int iters,
                          int warmup);
std::string format_bench_report(const BenchReport& report);

}  // namespace rgp

#endif  // RGP_TRAINER_HPP_
