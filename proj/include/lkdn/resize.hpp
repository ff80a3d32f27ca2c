#pragma once

#include <vector>

#include "lkdn/image.hpp"
#include "lkdn/tensor.hpp"

namespace lkdn {

// Cubic kernel a=-0.5. Downscaling widens the kernel by the inverse ratio
// (antialiasing); samples are edge-clamped and weights renormalized.
// All arithmetic in double.
std::vector<double> bicubic_resize_plane(const std::vector<double>& src, int in_h, int in_w,
                                         int out_h, int out_w);

Tensor bicubic_resize(const Tensor& t, int out_h, int out_w);
Image bicubic_resize(const Image& img, int out_h, int out_w);

}  // namespace lkdn
