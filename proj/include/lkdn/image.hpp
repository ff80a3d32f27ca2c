#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lkdn/tensor.hpp"

namespace lkdn {

// Interleaved 8-bit RGB.
struct Image {
  int h = 0, w = 0;
  std::vector<uint8_t> rgb;

  Image() = default;
  Image(int h_, int w_) : h(h_), w(w_), rgb(size_t(h_) * size_t(w_) * 3, 0) {
    if (h_ <= 0 || w_ <= 0) throw ShapeError("image dims must be positive");
  }

  uint8_t& at(int y, int x, int c) { return rgb[(size_t(y) * w + x) * 3 + c]; }
  uint8_t at(int y, int x, int c) const { return rgb[(size_t(y) * w + x) * 3 + c]; }
};

Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

// [0,1] float tensor (1,3,h,w) <-> 8-bit image; to_image clamps then rounds
// half away from zero.
Tensor to_tensor(const Image& img);
Image to_image(const Tensor& t);

Image modcrop(const Image& img, int scale);

}  // namespace lkdn
