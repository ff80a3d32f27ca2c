#pragma once

#include <vector>

#include "lkdn/image.hpp"
#include "lkdn/tensor.hpp"

namespace lkdn {

// BT.601 limited-range luminance on the 0-255 scale from [0,1] RGB:
// Y = 16 + 65.481 R + 128.553 G + 24.966 B.
Tensor rgb_to_y(const Tensor& rgb01);
std::vector<double> luminance(const Image& img);

// Both metrics run on the luminance plane after shaving `shave` pixels from
// every border. Identical inputs give the +infinity PSNR sentinel.
double psnr(const Image& a, const Image& b, int shave);
double ssim(const Image& a, const Image& b, int shave);

}  // namespace lkdn
