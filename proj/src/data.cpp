#include "lkdn/data.hpp"

#include <algorithm>
#include <filesystem>

#include "lkdn/common.hpp"
#include "lkdn/resize.hpp"

namespace fs = std::filesystem;

namespace lkdn {

PatchPair sample_patch_pair(const Image& hr, int scale, int lr_patch, Rng& rng) {
  if (scale <= 0 || lr_patch <= 0) throw ConfigError("sample_patch_pair: invalid scale/patch");
  const int lr_h = hr.h / scale, lr_w = hr.w / scale;
  if (lr_h < lr_patch || lr_w < lr_patch)
    throw ShapeError("image " + std::to_string(hr.h) + "x" + std::to_string(hr.w) +
                     " too small for " + std::to_string(lr_patch) + "-pixel LR patch at scale " +
                     std::to_string(scale));
  const int oy = rng.uniform_int(0, lr_h - lr_patch + 1);
  const int ox = rng.uniform_int(0, lr_w - lr_patch + 1);
  const int hp = lr_patch * scale;
  Image crop(hp, hp);
  for (int y = 0; y < hp; ++y)
    for (int x = 0; x < hp; ++x)
      for (int c = 0; c < 3; ++c) crop.at(y, x, c) = hr.at(oy * scale + y, ox * scale + x, c);
  PatchPair pair;
  pair.hr = to_tensor(crop);
  pair.lr = bicubic_resize(pair.hr, lr_patch, lr_patch);
  pair.lr_y0 = oy;
  pair.lr_x0 = ox;
  return pair;
}

AugmentFlags random_augment(Rng& rng) {
  AugmentFlags f;
  f.hflip = rng.uniform_int(0, 2) == 1;
  f.quarter_turns = rng.uniform_int(0, 4);
  return f;
}

Tensor hflip(const Tensor& t) {
  Tensor out(t.n(), t.c(), t.h(), t.w());
  for (int n = 0; n < t.n(); ++n)
    for (int c = 0; c < t.c(); ++c)
      for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) out.at(n, c, y, x) = t.at(n, c, y, t.w() - 1 - x);
  return out;
}

Tensor rot90(const Tensor& t) {
  Tensor out(t.n(), t.c(), t.w(), t.h());
  for (int n = 0; n < t.n(); ++n)
    for (int c = 0; c < t.c(); ++c)
      for (int y = 0; y < t.w(); ++y)
        for (int x = 0; x < t.h(); ++x) out.at(n, c, y, x) = t.at(n, c, x, t.w() - 1 - y);
  return out;
}

PatchPair augment(const PatchPair& pair, AugmentFlags flags) {
  PatchPair out = pair;
  if (flags.hflip) {
    out.lr = hflip(out.lr);
    out.hr = hflip(out.hr);
  }
  for (int i = 0; i < (flags.quarter_turns & 3); ++i) {
    out.lr = rot90(out.lr);
    out.hr = rot90(out.hr);
  }
  return out;
}

Image synth_image(uint64_t seed, int size) {
  static constexpr uint8_t kPalette[4][3] = {
      {13, 13, 13}, {242, 242, 242}, {230, 38, 26}, {26, 77, 217}};
  Rng rng(seed);
  Image img(size, size);
  const auto& bg = kPalette[rng.uniform_int(0, 4)];
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bg[c];

  const int nrect = rng.uniform_int(8, 16);
  for (int r = 0; r < nrect; ++r) {
    const int y0 = rng.uniform_int(0, size - 4);
    const int x0 = rng.uniform_int(0, size - 4);
    const int hh = rng.uniform_int(6, 32);
    const int ww = rng.uniform_int(6, 32);
    const auto& col = kPalette[rng.uniform_int(0, 4)];
    for (int y = y0; y < std::min(size, y0 + hh); ++y)
      for (int x = x0; x < std::min(size, x0 + ww); ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
  }

  const int nlines = rng.uniform_int(10, 17);
  for (int l = 0; l < nlines; ++l) {
    const auto& col = kPalette[rng.uniform_int(0, 4)];
    const bool horizontal = rng.uniform_int(0, 2) == 0;
    const int pos = rng.uniform_int(0, size);
    for (int i = 0; i < size; ++i) {
      const int y = horizontal ? pos : i;
      const int x = horizontal ? i : pos;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
    }
  }
  return img;
}

std::vector<Image> synth_corpus(uint64_t base_seed, int count, int size) {
  std::vector<Image> out;
  out.reserve(size_t(count));
  for (int i = 0; i < count; ++i) out.push_back(synth_image(derive_seed(base_seed, uint64_t(i)), size));
  return out;
}

std::vector<DatasetEntry> list_dataset(const std::string& hr_dir, const std::string& lr_dir,
                                       int scale) {
  if (!fs::is_directory(hr_dir)) throw IoError("dataset directory not found: " + hr_dir);
  std::vector<DatasetEntry> entries;
  for (const auto& item : fs::directory_iterator(hr_dir)) {
    if (!item.is_regular_file() || item.path().extension() != ".png") continue;
    DatasetEntry e;
    e.name = item.path().stem().string();
    e.hr_path = item.path().string();
    if (!lr_dir.empty()) {
      const fs::path lr = fs::path(lr_dir) / (e.name + "x" + std::to_string(scale) + ".png");
      if (fs::exists(lr)) e.lr_path = lr.string();
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw IoError("no PNG files in " + hr_dir);
  std::sort(entries.begin(), entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.name < b.name; });
  return entries;
}

}  // namespace lkdn
