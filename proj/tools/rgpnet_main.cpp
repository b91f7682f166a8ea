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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rgp/checkpoint.hpp"
#include "rgp/config.hpp"
#include "rgp/data.hpp"
#include "rgp/image.hpp"
#include "rgp/metrics.hpp"
#include "rgp/trainer.hpp"

namespace fs = std::filesystem;
using namespace rgp;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitDiverged = 3;

struct SizeArg {
  int height = 0;
  int width = 0;
};

SizeArg parse_size(const std::string& s) {
  SizeArg out;
  const auto x = s.find('x');
  RGP_CHECK(x != std::string::npos && x > 0 && x + 1 < s.size(),
            "--size must look like HxW (e.g. 128x256), got '", s, "'");
  out.height = std::stoi(s.substr(0, x));
  out.width = std::stoi(s.substr(x + 1));
  RGP_CHECK(out.height > 0 && out.width > 0, "--size must be positive, got '",
            s, "'");
  return out;
}

std::vector<double> parse_scales(const std::string& s) {
  std::vector<double> scales;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    scales.push_back(std::stod(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  RGP_CHECK(!scales.empty(), "--scales must list at least one factor");
  return scales;
}

RunConfig config_from_checkpoint(const Checkpoint& ck) {
  return RunConfig::from_json(nlohmann::json::parse(ck.config_json));
}

std::pair<RgpNet, RunConfig> load_net(const std::string& ckpt_path) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  RunConfig cfg = config_from_checkpoint(ck);
  RgpNet net(cfg.network, cfg.seed);
  load_into_net(ck, net, /*remap_head=*/false);
  net.set_training(false);
  return {std::move(net), cfg};
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume,
              std::optional<uint64_t> seed) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  const std::string data = data_dir.empty() ? cfg.data_path : data_dir;
  const std::string out = out_dir.empty() ? cfg.out_path : out_dir;
  RGP_CHECK(!data.empty(), "no dataset directory (--data or paths.data)");
  RGP_CHECK(!out.empty(), "no output directory (--out or paths.out)");

  // The effective configuration, defaults included, echoed for the record.
  std::cout << cfg.to_json().dump(2) << "\n";

  SegmentationDataset train_ds;
  SegmentationDataset val_ds;
  const SegmentationDataset* val = nullptr;
  if (fs::is_directory(fs::path(data) / "train")) {
    train_ds = SegmentationDataset::load((fs::path(data) / "train").string());
    if (fs::is_directory(fs::path(data) / "val")) {
      val_ds = SegmentationDataset::load((fs::path(data) / "val").string());
      val = &val_ds;
    }
  } else {
    train_ds = SegmentationDataset::load(data);
  }

  RgpNet net(cfg.network, cfg.seed);
  TrainOptions opts;
  opts.out_dir = out;
  opts.resume_path = resume;
  opts.eval_every = val ? 1 : 0;
  TrainingReport report = train_model(net, train_ds, val, cfg, opts);

  std::printf("epochs,%zu\n", report.rows.size());
  if (!report.rows.empty())
    std::printf("final_loss,%.8g\nfinal_miou,%.6g\n",
                report.rows.back().loss_mean, report.final_val_miou);
  std::printf("report,%s\n", (fs::path(out) / "report.csv").string().c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir,
             const std::string& scales_arg, bool flip) {
  auto [net, cfg] = load_net(ckpt);
  SegmentationDataset ds = SegmentationDataset::load(data_dir);
  RGP_CHECK(ds.num_classes == cfg.network.num_classes, "checkpoint has ",
            cfg.network.num_classes, " classes but the dataset declares ",
            ds.num_classes);
  const std::vector<double> scales =
      scales_arg.empty() ? std::vector<double>{1.0} : parse_scales(scales_arg);
  ConfusionMatrix cm = evaluate_dataset(net, ds, scales, flip);
  const auto iou = per_class_iou(cm);
  std::printf("class,iou\n");
  for (int c = 0; c < cm.num_classes; ++c) {
    const std::string name = c < static_cast<int>(ds.class_names.size())
                                 ? ds.class_names[static_cast<size_t>(c)]
                                 : std::to_string(c);
    if (iou[static_cast<size_t>(c)].has_value())
      std::printf("%s,%.6f\n", name.c_str(), *iou[static_cast<size_t>(c)]);
    else
      std::printf("%s,absent\n", name.c_str());
  }
  std::printf("miou,%.6f\n", miou(cm));
  std::printf("pixel_acc,%.6f\n", pixel_accuracy(cm));
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& image_path,
              const std::string& out_path) {
  auto [net, cfg] = load_net(ckpt);
  (void)cfg;
  ImageU8 img = read_png(image_path);
  Tensor input = Tensor::from_values({1, 3, img.height, img.width},
                                     image_to_tensor(img).values());
  Tensor logits = net.forward(input);
  LabelMap pred = argmax_labels(logits, 0);

  fs::path color_path(out_path);
  fs::path label_path = color_path;
  label_path.replace_filename(color_path.stem().string() + "_labels" +
                              color_path.extension().string());
  write_png(color_path.string(), colorize_labels(pred));
  write_label_png(label_path.string(), pred);
  std::printf("wrote,%s\nwrote,%s\n", color_path.string().c_str(),
              label_path.string().c_str());
  return 0;
}

int cmd_bench(const std::string& ckpt, const std::string& size_arg, int iters,
              int warmup) {
  auto [net, cfg] = load_net(ckpt);
  (void)cfg;
  const SizeArg size = parse_size(size_arg);
  const int mult = net.config().input_multiple();
  RGP_CHECK(size.height % mult == 0 && size.width % mult == 0, "--size ",
            size.height, "x", size.width, " must be divisible by ", mult);
  BenchReport report = run_benchmark(net, size.height, size.width, iters, warmup);
  std::fputs(format_bench_report(report).c_str(), stdout);
  return 0;
}

int cmd_border_stats(const std::string& data_dir, int kernel) {
  SegmentationDataset ds = SegmentationDataset::load(data_dir);
  std::printf("image,pixel_count,border_count,fraction\n");
  int64_t pixels = 0, borders = 0;
  for (const auto& item : ds.items) {
    LabelMap lm = read_label_png(item.label_path);
    BorderMask mask = detect_borders(lm, kernel, ds.num_classes);
    const int64_t b = mask.border_count();
    std::printf("%s,%lld,%lld,%.6f\n", item.stem.c_str(),
                static_cast<long long>(lm.size()), static_cast<long long>(b),
                static_cast<double>(b) / static_cast<double>(lm.size()));
    pixels += lm.size();
    borders += b;
  }
  std::printf("total,%lld,%lld,%.6f\n", static_cast<long long>(pixels),
              static_cast<long long>(borders),
              static_cast<double>(borders) / static_cast<double>(pixels));
  return 0;
}

int cmd_entropy_diff(const std::string& ckpt_a, const std::string& ckpt_b,
                     const std::string& image_path, const std::string& out_path) {
  auto [net_a, cfg_a] = load_net(ckpt_a);
  auto [net_b, cfg_b] = load_net(ckpt_b);
  RGP_CHECK(cfg_a.network.num_classes == cfg_b.network.num_classes,
            "checkpoints disagree on the class count (",
            cfg_a.network.num_classes, " vs ", cfg_b.network.num_classes, ")");
  ImageU8 img = read_png(image_path);
  Tensor input = Tensor::from_values({1, 3, img.height, img.width},
                                     image_to_tensor(img).values());
  Tensor diff = entropy_diff(net_a.forward(input), net_b.forward(input));

  const std::vector<float>& values = diff.values();
  fs::path png_path(out_path);
  fs::path csv_path = png_path;
  csv_path.replace_extension(".csv");
  write_png(png_path.string(), colorize_signed(values, img.height, img.width));
  std::ofstream csv(csv_path);
  RGP_CHECK_IO(csv.good(), "cannot write '", csv_path.string(), "'");
  csv << "y,x,entropy_diff\n";
  double mean = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float v = values[static_cast<size_t>(y) * img.width + x];
      char line[64];
      std::snprintf(line, sizeof(line), "%d,%d,%.6g\n", y, x, v);
      csv << line;
      mean += v;
    }
  mean /= static_cast<double>(img.height) * img.width;
  std::printf("mean_diff,%.6g\nwrote,%s\nwrote,%s\n", mean,
              png_path.string().c_str(), csv_path.string().c_str());
  return 0;
}

int cmd_synth(const std::string& out_dir, int n, const std::string& size_arg,
              int classes, uint64_t seed) {
  const SizeArg size = parse_size(size_arg);
  SegmentationDataset ds =
      generate_synthetic(n, size.height, size.width, classes, seed, out_dir);
  std::printf("generated,%zu,%s\n", ds.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rgpnet: real-time semantic segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, resume, ckpt, ckpt_b, image_path,
      out_path, scales_arg;
  std::string size_arg = "64x64";
  uint64_t seed = 1;
  uint64_t seed_flag = 0;
  bool flip = false;
  int iters = 20, warmup = 5, kernel = 3, n = 16, classes = 4;

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "Run configuration JSON")->required();
  train->add_option("--data", data_dir,
                    "Dataset directory (flat, or parent of train/ and val/)");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--resume", resume, "Checkpoint to resume from");
  auto* seed_cli = train->add_option("--seed", seed_flag, "Override the config seed");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--scales", scales_arg, "Comma-separated scale list (default 1)");
  eval->add_flag("--flip", flip, "Average with horizontally flipped passes");

  auto* infer = app.add_subcommand("infer", "Segment one image");
  infer->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  infer->add_option("--image", image_path, "Input PNG")->required();
  infer->add_option("--out", out_path, "Output PNG (raw ids written beside it)")
      ->required();

  auto* bench = app.add_subcommand("bench", "Measure inference speed");
  bench->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  bench->add_option("--size", size_arg, "Input size HxW");
  bench->add_option("--iters", iters, "Timed iterations");
  bench->add_option("--warmup", warmup, "Warmup iterations (untimed)");

  auto* border = app.add_subcommand("border-stats", "Border-pixel statistics");
  border->add_option("--data", data_dir, "Dataset directory")->required();
  border->add_option("--kernel", kernel, "Window size (odd, >= 3)");

  auto* ediff = app.add_subcommand(
      "entropy-diff", "Entropy difference map between two checkpoints");
  ediff->add_option("--ckpt-a", ckpt, "First checkpoint")->required();
  ediff->add_option("--ckpt-b", ckpt_b, "Second checkpoint")->required();
  ediff->add_option("--image", image_path, "Input PNG")->required();
  ediff->add_option("--out", out_path, "Output PNG (CSV written beside it)")
      ->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--n", n, "Number of images");
  synth->add_option("--size", size_arg, "Image size HxW");
  synth->add_option("--classes", classes, "Class count (2..4)");
  synth->add_option("--seed", seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<uint64_t> seed_opt;
    if (seed_cli->count() > 0) seed_opt = seed_flag;
    if (train->parsed())
      return cmd_train(config_path, data_dir, out_dir, resume, seed_opt);
    if (eval->parsed()) return cmd_eval(ckpt, data_dir, scales_arg, flip);
    if (infer->parsed()) return cmd_infer(ckpt, image_path, out_path);
    if (bench->parsed()) return cmd_bench(ckpt, size_arg, iters, warmup);
    if (border->parsed()) return cmd_border_stats(data_dir, kernel);
    if (ediff->parsed())
      return cmd_entropy_diff(ckpt, ckpt_b, image_path, out_path);
    if (synth->parsed()) return cmd_synth(out_dir, n, size_arg, classes, seed);
  } catch (const TrainDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
