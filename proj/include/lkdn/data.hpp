#pragma once

#include <string>
#include <vector>

#include "lkdn/image.hpp"
#include "lkdn/rng.hpp"
#include "lkdn/tensor.hpp"

namespace lkdn {

// Training pair as [0,1] float tensors, (1,3,h,w). The LR side is the bicubic
// downscale of the HR crop, so the two stay exactly aligned; the HR crop
// origin is lr origin * scale.
struct PatchPair {
  Tensor lr, hr;
  int lr_y0 = 0, lr_x0 = 0;
};

PatchPair sample_patch_pair(const Image& hr, int scale, int lr_patch, Rng& rng);

struct AugmentFlags {
  bool hflip = false;
  int quarter_turns = 0;  // 0..3 counter-clockwise
};

AugmentFlags random_augment(Rng& rng);
Tensor hflip(const Tensor& t);
Tensor rot90(const Tensor& t);
PatchPair augment(const PatchPair& pair, AugmentFlags flags);

// Flat-color synthetic scene: palette background, random rectangles, thin
// full-length lines. Gives training signal with hard edges at every scale.
Image synth_image(uint64_t seed, int size = 96);
std::vector<Image> synth_corpus(uint64_t base_seed, int count, int size = 96);

struct DatasetEntry {
  std::string name;     // HR file stem
  std::string hr_path;
  std::string lr_path;  // empty when no pre-generated LR exists
};

// HR PNGs sorted by name; LR resolved as {lr_dir}/{name}x{scale}.png when
// present. lr_dir may be empty.
std::vector<DatasetEntry> list_dataset(const std::string& hr_dir, const std::string& lr_dir,
                                       int scale);

}  // namespace lkdn
