#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lkdn/checkpoint.hpp"
#include "lkdn/metrics.hpp"
#include "lkdn/model.hpp"
#include "lkdn/reparam.hpp"
#include "lkdn/resize.hpp"
#include "lkdn/train.hpp"

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw lkdn::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw lkdn::IoError("failed writing " + path);
}

int cmd_train(const std::string& config_path, const std::string& resume) {
  const lkdn::RunConfig rc = lkdn::RunConfig::from_file(config_path);
  const lkdn::TrainResult r = lkdn::train_loop(rc, resume, std::cout);
  std::cout << "done: " << r.steps << " steps, loss " << r.initial_loss << " -> " << r.final_loss;
  if (r.val_psnr > 0.0)
    std::cout << ", val_psnr " << r.val_psnr << " (bicubic " << r.val_bicubic_psnr << ")";
  std::cout << "\n";
  if (!r.last_checkpoint.empty()) std::cout << "checkpoint: " << r.last_checkpoint << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& lr_dir,
             int scale, const std::string& csv_path) {
  lkdn::EvalTable table;
  if (ckpt == "bicubic") {
    table = lkdn::evaluate_dir(nullptr, data_dir, lr_dir, scale);
  } else {
    const lkdn::Checkpoint ck = lkdn::Checkpoint::load(ckpt);
    table = lkdn::evaluate_dir(&ck, data_dir, lr_dir, scale);
  }
  std::cout << table.to_text();
  if (!csv_path.empty()) write_text_file(csv_path, table.to_csv());
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& in_path, const std::string& out_path) {
  const lkdn::Checkpoint ck = lkdn::Checkpoint::load(ckpt);
  const lkdn::Image lr = lkdn::load_png(in_path);
  const lkdn::Image sr = lkdn::sr_image(ck.cfg, ck.eval_params(), lr);
  lkdn::save_png(out_path, sr);
  std::cout << out_path << " " << sr.w << "x" << sr.h << "\n";
  return 0;
}

int cmd_fuse(const std::string& in_path, const std::string& out_path) {
  const lkdn::Checkpoint in = lkdn::Checkpoint::load(in_path);
  if (in.cfg.fused) {
    std::cerr << "warning: checkpoint is already fused; nothing to do\n";
    return 0;
  }
  lkdn::Model model{in.cfg, in.eval_params()};
  auto [fused, report] = lkdn::fuse_model(model);
  lkdn::Checkpoint out;
  out.cfg = fused.cfg;
  out.optimizer = "none";
  out.step = in.step;
  out.params = std::move(fused.params);
  out.save(out_path);
  if (report.empty())
    std::cout << "nothing to fuse for this configuration; checkpoint rewritten unchanged\n";
  else
    std::cout << report.to_text();
  return 0;
}

int cmd_count(const std::string& config_path, const std::string& preset) {
  lkdn::LKDNConfig cfg;
  if (!preset.empty()) {
    cfg = lkdn::LKDNConfig::preset(preset);
  } else {
    auto kv = lkdn::read_kv_file(config_path);
    cfg = lkdn::config_from_kv(kv);
    if (!kv.empty())
      throw lkdn::ConfigError(config_path + ": unknown config key '" + kv.begin()->first + "'");
  }
  const int64_t params = lkdn::count_params(cfg);
  const int64_t madds = lkdn::count_multadds(cfg);
  auto kv = lkdn::config_to_kv(cfg);
  std::cout << "config:";
  for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
  std::cout << "\n";
  std::printf("params      %lld (%.1fK)\n", (long long)params, double(params) / 1e3);
  std::printf("multi-adds  %lld (%.2fG) at 1280x720 ground truth\n", (long long)madds,
              double(madds) / 1e9);
  std::printf("attention receptive field  %d\n", lkdn::attention_receptive_field(cfg));
  return 0;
}

int cmd_degrade(const std::string& in_dir, const std::string& out_dir, int scale) {
  namespace fs = std::filesystem;
  const auto entries = lkdn::list_dataset(in_dir, "", scale);
  fs::create_directories(out_dir);
  for (const auto& e : entries) {
    const lkdn::Image hr = lkdn::modcrop(lkdn::load_png(e.hr_path), scale);
    const lkdn::Image lr = lkdn::bicubic_resize(hr, hr.h / scale, hr.w / scale);
    const std::string out =
        (fs::path(out_dir) / (e.name + "x" + std::to_string(scale) + ".png")).string();
    lkdn::save_png(out, lr);
    std::cout << out << " " << lr.w << "x" << lr.h << "\n";
  }
  std::cout << entries.size() << " images degraded\n";
  return 0;
}

int cmd_optbench(const std::string& objective, int64_t steps, const std::string& out_path) {
  const std::string csv = lkdn::optbench_csv(objective, steps, std::cerr);
  if (out_path.empty())
    std::cout << csv;
  else
    write_text_file(out_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-image super-resolution: training, evaluation and kernel fusion"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model from a run config file");
  std::string train_config, train_resume;
  train->add_option("--config", train_config, "run config file (key value lines)")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  auto* eval = app.add_subcommand("eval", "PSNR/SSIM over a dataset directory");
  std::string eval_ckpt, eval_data, eval_lr_dir, eval_csv;
  int eval_scale = 0;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path, or 'bicubic' for the baseline")
      ->required();
  eval->add_option("--data", eval_data, "directory of HR PNGs")->required();
  eval->add_option("--scale", eval_scale, "upscaling factor")->required();
  eval->add_option("--lr-dir", eval_lr_dir, "directory of pre-generated {name}x{scale}.png inputs");
  eval->add_option("--csv", eval_csv, "also write the table as CSV to this path");

  auto* infer = app.add_subcommand("infer", "super-resolve one PNG");
  std::string infer_ckpt, infer_in, infer_out;
  infer->add_option("--ckpt", infer_ckpt, "checkpoint path")->required();
  infer->add_option("--in", infer_in, "input PNG")->required();
  infer->add_option("--out", infer_out, "output PNG")->required();

  auto* fuse = app.add_subcommand("fuse", "fold re-parameterized branches into plain kernels");
  std::string fuse_in, fuse_out;
  fuse->add_option("--in", fuse_in, "training-form checkpoint")->required();
  fuse->add_option("--out", fuse_out, "fused checkpoint to write")->required();

  auto* count = app.add_subcommand("count", "parameter and multiply-add accounting");
  std::string count_config, count_preset;
  count->add_option("--config", count_config, "model config file");
  count->add_option("--preset", count_preset, "model preset name (lkdn|lkdn-s|lkdn-tiny)");

  auto* degrade = app.add_subcommand("degrade", "generate bicubic LR images for a dataset");
  std::string degrade_in, degrade_out;
  int degrade_scale = 0;
  degrade->add_option("--in", degrade_in, "directory of HR PNGs")->required();
  degrade->add_option("--out", degrade_out, "output directory")->required();
  degrade->add_option("--scale", degrade_scale, "downscaling factor")->required();

  auto* optbench = app.add_subcommand("optbench", "optimizer convergence comparison (CSV)");
  std::string bench_objective, bench_out;
  int64_t bench_steps = 0;
  optbench->add_option("--objective", bench_objective, "quadratic|tiny-sr")->required();
  optbench->add_option("--steps", bench_steps, "steps per optimizer")->required();
  optbench->add_option("--out", bench_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_config, train_resume);
    if (eval->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_lr_dir, eval_scale, eval_csv);
    if (infer->parsed()) return cmd_infer(infer_ckpt, infer_in, infer_out);
    if (fuse->parsed()) return cmd_fuse(fuse_in, fuse_out);
    if (count->parsed()) {
      if (count_config.empty() == count_preset.empty())
        throw lkdn::ConfigError("count needs exactly one of --config or --preset");
      return cmd_count(count_config, count_preset);
    }
    if (degrade->parsed()) return cmd_degrade(degrade_in, degrade_out, degrade_scale);
    if (optbench->parsed()) return cmd_optbench(bench_objective, bench_steps, bench_out);
  } catch (const lkdn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lkdn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
