#include <doctest.h>
#include <png.h>

#include <cmath>

#include "helpers.hpp"
#include "lkdn/data.hpp"
#include "lkdn/metrics.hpp"
#include "lkdn/resize.hpp"
#include "oracles.hpp"

using namespace lkdn;
using testutil::rand_tensor;
using testutil::TempDir;

namespace {

Image random_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (auto& v : img.rgb) v = uint8_t(rng.uniform_int(0, 256));
  return img;
}

void write_png16(const std::string& path) {
  FILE* f = fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, f);
  png_set_IHDR(png, info, 4, 4, 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint16_t> row(4 * 3, 0x1234);
  for (int y = 0; y < 4; ++y) png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  fclose(f);
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("png files round-trip byte for byte") {
  TempDir tmp("png");
  Image img = random_image(9, 13, 1);
  save_png(tmp.file("a.png"), img);
  Image back = load_png(tmp.file("a.png"));
  CHECK(back.h == img.h);
  CHECK(back.w == img.w);
  CHECK(back.rgb == img.rgb);

  Image red(1, 1);
  red.at(0, 0, 0) = 255;
  save_png(tmp.file("red.png"), red);
  Image red2 = load_png(tmp.file("red.png"));
  CHECK(red2.rgb == std::vector<uint8_t>{255, 0, 0});

  CHECK_THROWS_AS(load_png(tmp.file("missing.png")), IoError);
  testutil::write_text(tmp.file("not.png"), "plain text");
  CHECK_THROWS_AS(load_png(tmp.file("not.png")), IoError);
}

TEST_CASE("16-bit png input is rejected") {
  TempDir tmp("png16");
  write_png16(tmp.file("deep.png"));
  CHECK_THROWS_AS(load_png(tmp.file("deep.png")), IoError);
}

TEST_CASE("luminance hits the limited-range anchors") {
  Tensor white = Tensor::full(1, 3, 1, 1, 1.0f);
  Tensor black = Tensor::zeros(1, 3, 1, 1);
  Tensor red = Tensor::zeros(1, 3, 1, 1);
  red.at(0, 0, 0, 0) = 1.0f;
  CHECK(rgb_to_y(white).data[0] == doctest::Approx(235.0));
  CHECK(rgb_to_y(black).data[0] == doctest::Approx(16.0));
  CHECK(rgb_to_y(red).data[0] == doctest::Approx(81.481));

  Image w(2, 2);
  std::fill(w.rgb.begin(), w.rgb.end(), uint8_t(255));
  auto lum = luminance(w);
  for (double v : lum) CHECK(v == doctest::Approx(235.0));
}

TEST_CASE("resizing a constant image returns the constant") {
  for (auto [in, out] : {std::pair{17, 9}, std::pair{8, 32}, std::pair{20, 7}}) {
    CAPTURE(in);
    CAPTURE(out);
    Tensor t = Tensor::full(1, 3, in, in, 0.4375f);
    Tensor r = bicubic_resize(t, out, out);
    CHECK(max_abs_diff(r, Tensor::full(1, 3, out, out, 0.4375f)) <= 1e-6);
  }
}

TEST_CASE("identity resize is pixel-exact") {
  Tensor t = rand_tensor(1, 3, 11, 7, 2, 0.0, 1.0);
  CHECK(max_abs_diff(t, bicubic_resize(t, 11, 7)) == 0.0);

  Image img = random_image(10, 6, 3);
  Image same = bicubic_resize(img, 10, 6);
  CHECK(same.rgb == img.rgb);
}

TEST_CASE("downscaling matches the direct 1-d cubic oracle") {
  const int in_n = 48, out_n = 12;
  std::vector<double> ramp(static_cast<size_t>(in_n));
  for (int i = 0; i < in_n; ++i) ramp[size_t(i)] = 0.3 + 0.01 * i + 0.0002 * i * i;

  // horizontal: one row
  Tensor row(1, 1, 1, in_n);
  for (int i = 0; i < in_n; ++i) row.at(0, 0, 0, i) = float(ramp[size_t(i)]);
  Tensor rrow = bicubic_resize(row, 1, out_n);
  auto want = oracle::cubic_resample_1d(ramp, out_n);
  for (int i = 0; i < out_n; ++i)
    CHECK(std::abs(double(rrow.at(0, 0, 0, i)) - want[size_t(i)]) <= 1e-4);

  // vertical: every column of a vertically varying image
  Tensor col(1, 1, in_n, 3);
  for (int i = 0; i < in_n; ++i)
    for (int j = 0; j < 3; ++j) col.at(0, 0, i, j) = float(ramp[size_t(i)]);
  Tensor rcol = bicubic_resize(col, out_n, 3);
  for (int i = 0; i < out_n; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(double(rcol.at(0, 0, i, j)) - want[size_t(i)]) <= 1e-4);
}

TEST_CASE("modcrop trims to a multiple of the scale keeping the top left") {
  Image img = random_image(13, 10, 4);
  Image crop = modcrop(img, 4);
  CHECK(crop.h == 12);
  CHECK(crop.w == 8);
  for (int y = 0; y < crop.h; ++y)
    for (int x = 0; x < crop.w; ++x)
      for (int c = 0; c < 3; ++c) CHECK(crop.at(y, x, c) == img.at(y, x, c));
  Image same = modcrop(img, 1);
  CHECK(same.rgb == img.rgb);
}

TEST_CASE("patch sampling is aligned, in bounds, and reproducible") {
  const int scale = 3, lr_patch = 16;
  Image hr = synth_image(99, 96);
  const int lr_h = hr.h / scale, lr_w = hr.w / scale;

  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    PatchPair pair = sample_patch_pair(hr, scale, lr_patch, rng);
    REQUIRE(pair.lr_y0 >= 0);
    REQUIRE(pair.lr_x0 >= 0);
    REQUIRE(pair.lr_y0 + lr_patch <= lr_h);
    REQUIRE(pair.lr_x0 + lr_patch <= lr_w);
    REQUIRE(pair.hr.shape == std::array<int, 4>{1, 3, lr_patch * scale, lr_patch * scale});
    REQUIRE(pair.lr.shape == std::array<int, 4>{1, 3, lr_patch, lr_patch});
  }

  Rng r1(8), r2(8);
  PatchPair a = sample_patch_pair(hr, scale, lr_patch, r1);
  PatchPair b = sample_patch_pair(hr, scale, lr_patch, r2);
  CHECK(a.lr_y0 == b.lr_y0);
  CHECK(max_abs_diff(a.hr, b.hr) == 0.0);
  CHECK(max_abs_diff(a.lr, b.lr) == 0.0);

  // the HR side is the crop at (lr origin * scale)
  const int hp = lr_patch * scale;
  Tensor hand(1, 3, hp, hp);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < hp; ++y)
      for (int x = 0; x < hp; ++x)
        hand.at(0, c, y, x) =
            float(hr.at(a.lr_y0 * scale + y, a.lr_x0 * scale + x, c)) / 255.0f;
  CHECK(max_abs_diff(a.hr, hand) == 0.0);

  // and the LR side is its recomputed bicubic downscale
  CHECK(max_abs_diff(a.lr, bicubic_resize(a.hr, lr_patch, lr_patch)) == 0.0);
}

TEST_CASE("augmentations compose back to the identity") {
  Tensor t = rand_tensor(1, 3, 8, 8, 11);
  CHECK(max_abs_diff(t, hflip(hflip(t))) == 0.0);
  Tensor r = t;
  for (int i = 0; i < 4; ++i) r = rot90(r);
  CHECK(max_abs_diff(t, r) == 0.0);

  PatchPair pair{t, rand_tensor(1, 3, 16, 16, 12), 0, 0};
  PatchPair same = augment(pair, AugmentFlags{false, 0});
  CHECK(max_abs_diff(pair.lr, same.lr) == 0.0);
  CHECK(max_abs_diff(pair.hr, same.hr) == 0.0);

  PatchPair moved = augment(pair, AugmentFlags{true, 3});
  CHECK(max_abs_diff(moved.lr, rot90(rot90(rot90(hflip(pair.lr))))) == 0.0);
  CHECK(max_abs_diff(moved.hr, rot90(rot90(rot90(hflip(pair.hr))))) == 0.0);
}

TEST_CASE("rot90 turns rows into columns") {
  Tensor t(1, 1, 2, 3);
  // 1 2 3        3 6
  // 4 5 6   ->   2 5
  //              1 4
  t.data = {1, 2, 3, 4, 5, 6};
  Tensor r = rot90(t);
  CHECK(r.shape == std::array<int, 4>{1, 1, 3, 2});
  CHECK(r.data == std::vector<float>{3, 6, 2, 5, 1, 4});
}

TEST_CASE("augmenting both images of a pair leaves psnr unchanged") {
  Tensor a = rand_tensor(1, 3, 24, 24, 13, 0.0, 1.0);
  Tensor b = rand_tensor(1, 3, 24, 24, 14, 0.0, 1.0);
  const double base = psnr(to_image(a), to_image(b), 0);
  for (AugmentFlags f : {AugmentFlags{true, 0}, AugmentFlags{false, 1}, AugmentFlags{true, 3}}) {
    PatchPair pair{a, b, 0, 0};
    PatchPair t = augment(pair, f);
    CHECK(psnr(to_image(t.lr), to_image(t.hr), 0) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("random augmentation flags cover their full range") {
  Rng rng(15);
  bool saw_flip = false, saw_noflip = false;
  bool saw_turn[4] = {false, false, false, false};
  for (int i = 0; i < 200; ++i) {
    AugmentFlags f = random_augment(rng);
    (f.hflip ? saw_flip : saw_noflip) = true;
    REQUIRE(f.quarter_turns >= 0);
    REQUIRE(f.quarter_turns < 4);
    saw_turn[f.quarter_turns] = true;
  }
  CHECK(saw_flip);
  CHECK(saw_noflip);
  for (bool s : saw_turn) CHECK(s);
}

TEST_CASE("synthetic scenes are deterministic and stay on the palette") {
  Image a = synth_image(42, 96);
  Image b = synth_image(42, 96);
  CHECK(a.rgb == b.rgb);
  Image c = synth_image(43, 96);
  CHECK(a.rgb != c.rgb);

  auto on_palette = [](const Image& img) {
    static constexpr uint8_t pal[4][3] = {
        {13, 13, 13}, {242, 242, 242}, {230, 38, 26}, {26, 77, 217}};
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        bool hit = false;
        for (const auto& p : pal)
          hit = hit || (img.at(y, x, 0) == p[0] && img.at(y, x, 1) == p[1] &&
                        img.at(y, x, 2) == p[2]);
        if (!hit) return false;
      }
    return true;
  };
  CHECK(on_palette(a));

  auto corpus = synth_corpus(0, 4, 96);
  CHECK(corpus.size() == 4);
  CHECK(corpus[0].rgb != corpus[1].rgb);
  for (const auto& img : corpus) CHECK(on_palette(img));
}

TEST_CASE("dataset listing sorts by name and resolves lr companions") {
  TempDir tmp("dataset");
  std::filesystem::create_directories(tmp.path / "hr");
  std::filesystem::create_directories(tmp.path / "lr");
  save_png((tmp.path / "hr" / "zebra.png").string(), random_image(8, 8, 20));
  save_png((tmp.path / "hr" / "apple.png").string(), random_image(8, 8, 21));
  save_png((tmp.path / "hr" / "mango.png").string(), random_image(8, 8, 22));
  testutil::write_text((tmp.path / "hr" / "notes.txt").string(), "skip me");
  save_png((tmp.path / "lr" / "applex2.png").string(), random_image(4, 4, 23));

  auto entries = list_dataset((tmp.path / "hr").string(), (tmp.path / "lr").string(), 2);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].name == "apple");
  CHECK(entries[1].name == "mango");
  CHECK(entries[2].name == "zebra");
  CHECK(!entries[0].lr_path.empty());
  CHECK(entries[1].lr_path.empty());
  CHECK(entries[2].lr_path.empty());

  CHECK_THROWS_AS(list_dataset((tmp.path / "nope").string(), "", 2), IoError);
  std::filesystem::create_directories(tmp.path / "empty");
  CHECK_THROWS_AS(list_dataset((tmp.path / "empty").string(), "", 2), IoError);
}

TEST_CASE("psnr and ssim behave like metrics") {
  Image a = random_image(32, 32, 30);
  CHECK(std::isinf(psnr(a, a, 0)));
  CHECK(ssim(a, a, 0) == doctest::Approx(1.0));

  // constant luminance offset of 1 -> psnr = 10 log10(255^2) = 48.1308 dB
  Image b(16, 16), c(16, 16);
  std::fill(b.rgb.begin(), b.rgb.end(), uint8_t(100));
  std::fill(c.rgb.begin(), c.rgb.end(), uint8_t(100));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      // +1 on every channel shifts y by (65.481+128.553+24.966)/255 ~ 0.8588
      c.at(y, x, 0) = 101;
      c.at(y, x, 1) = 101;
      c.at(y, x, 2) = 101;
    }
  const double dy = (65.481 + 128.553 + 24.966) / 255.0;
  CHECK(psnr(b, c, 0) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / (dy * dy))));

  Image d = random_image(32, 32, 31);
  CHECK(psnr(a, d, 2) == doctest::Approx(psnr(d, a, 2)));
  CHECK(ssim(a, d, 2) == doctest::Approx(ssim(d, a, 2)));
  const double s = ssim(a, d, 0);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);
  CHECK(s < 1.0);
}

TEST_CASE("shaved borders are excluded from the metrics") {
  Image a = random_image(24, 24, 32);
  Image b = random_image(24, 24, 33);
  const double p0 = psnr(a, b, 4);
  const double s0 = ssim(a, b, 4);
  Image corrupted = b;
  for (int x = 0; x < 24; ++x)
    for (int c = 0; c < 3; ++c) {
      corrupted.at(0, x, c) = 255;
      corrupted.at(23, x, c) = 0;
      corrupted.at(x, 0, c) = 255;
      corrupted.at(x, 23, c) = 0;
    }
  CHECK(psnr(a, corrupted, 4) == p0);
  CHECK(ssim(a, corrupted, 4) == s0);
  CHECK(psnr(a, corrupted, 0) != p0);
  CHECK_THROWS_AS(psnr(a, b, 12), ShapeError);
}

}  // TEST_SUITE
