#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lkdn/checkpoint.hpp"
#include "lkdn/data.hpp"
#include "lkdn/model.hpp"
#include "lkdn/optim.hpp"

namespace lkdn {

// Batch size and LR-side patch size for one schedule stage.
struct TrainStage {
  int batch_size = 64;
  int lr_patch = 48;
};

struct RunConfig {
  LKDNConfig model;
  std::string train_dir;  // empty -> synthetic corpus
  std::string val_dir;    // empty -> synthetic corpus
  int synth_train_images = 16;
  int synth_val_images = 4;
  int synth_size = 96;
  Schedule schedule = Schedule::preset_lkdn();
  std::vector<TrainStage> stages{TrainStage{}};  // one entry, or one per schedule stage
  std::string optimizer = "adan";                // adan|adam
  double ema_decay = 0.999;
  uint64_t seed = 0;
  int64_t checkpoint_every = 5000;
  int64_t eval_every = 5000;
  int64_t log_every = 100;
  int64_t max_steps = -1;  // cap below the schedule total; -1 = full schedule
  std::string out_dir;     // empty -> no checkpoints or log file

  int64_t total_steps() const;
  TrainStage stage_at(int64_t step) const;
  void validate() const;

  // lkdn: batch 64, LR patch 48, 1e6 steps of L1 at 5e-3, Adan.
  // lkdn-s: batch 128/LR 64 for 950k L1 steps, then batch 64/LR 120 for 50k L2.
  // lkdn-tiny: desk-scale smoke recipe (Adam, 2000 steps, synthetic corpus).
  static RunConfig recipe(const std::string& name);
  static RunConfig from_file(const std::string& path);
};

struct TrainResult {
  int64_t steps = 0;
  std::vector<double> losses;  // per-step training loss
  double initial_loss = 0.0;   // mean over the first 50 steps
  double final_loss = 0.0;     // mean over the last 50 steps
  double val_psnr = 0.0;       // last validation pass, EMA weights
  double val_bicubic_psnr = 0.0;
  std::string last_checkpoint;  // empty when out_dir is empty
};

// sample -> augment -> forward -> loss -> backward -> step -> EMA, with
// periodic logging, validation, and resumable checkpoints. Deterministic for
// a fixed config: every random stream is derived from (seed, step).
TrainResult train_loop(const RunConfig& rc, const std::string& resume_path, std::ostream& log);

struct EvalRow {
  std::string name;
  double psnr = 0.0, ssim = 0.0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0, mean_ssim = 0.0;

  std::string to_csv() const;
  std::string to_text() const;
};

// Per-image PSNR/SSIM over a dataset directory, shave = scale. `ck` null runs
// the bicubic upscaling baseline instead of a model. HR images are mod-cropped
// to the scale; LR comes from lr_dir when the matching file exists, otherwise
// from bicubic degradation of the HR image.
EvalTable evaluate_dir(const Checkpoint* ck, const std::string& hr_dir, const std::string& lr_dir,
                       int scale);

// Model output for one LR image: forward, clamp to [0,1], 8-bit quantize.
Image sr_image(const LKDNConfig& cfg, const ParamStore& params, const Image& lr);

// Convergence curves under identical initialization.
// objective "quadratic": scalar theta^2, lr 0.01, per-step loss for adan/adam.
// objective "tiny-sr": lkdn-tiny recipe trained once per optimizer.
std::string optbench_csv(const std::string& objective, int64_t steps, std::ostream& log);

}  // namespace lkdn
