#include "lkdn/resize.hpp"

#include <algorithm>
#include <cmath>

#include "lkdn/common.hpp"

namespace lkdn {

namespace {

double cubic(double x) {
  const double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

struct AxisTap {
  int first = 0;
  std::vector<double> weights;
};

// Output coordinate i maps to input coordinate (i+0.5)/ratio - 0.5.
std::vector<AxisTap> axis_taps(int in, int out) {
  const double ratio = double(out) / double(in);
  const bool antialias = ratio < 1.0;
  const double scale = antialias ? ratio : 1.0;
  const double half = 2.0 / scale;
  std::vector<AxisTap> taps(static_cast<size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double u = (i + 0.5) / ratio - 0.5;
    const int j0 = int(std::floor(u - half)) + 1;
    const int j1 = int(std::floor(u + half));
    AxisTap& t = taps[size_t(i)];
    t.first = j0;
    t.weights.resize(size_t(j1 - j0 + 1));
    double sum = 0.0;
    for (int j = j0; j <= j1; ++j) {
      const double w = scale * cubic(scale * (u - j));
      t.weights[size_t(j - j0)] = w;
      sum += w;
    }
    if (sum != 0.0)
      for (double& w : t.weights) w /= sum;
  }
  return taps;
}

}  // namespace

std::vector<double> bicubic_resize_plane(const std::vector<double>& src, int in_h, int in_w,
                                         int out_h, int out_w) {
  if (in_h <= 0 || in_w <= 0 || out_h <= 0 || out_w <= 0)
    throw ShapeError("bicubic_resize: dims must be positive");
  if (src.size() != size_t(in_h) * size_t(in_w))
    throw ShapeError("bicubic_resize: plane size mismatch");

  const auto col_taps = axis_taps(in_w, out_w);
  std::vector<double> mid(size_t(in_h) * size_t(out_w));
  for (int y = 0; y < in_h; ++y) {
    const double* row = src.data() + size_t(y) * size_t(in_w);
    double* out = mid.data() + size_t(y) * size_t(out_w);
    for (int x = 0; x < out_w; ++x) {
      const AxisTap& t = col_taps[size_t(x)];
      double acc = 0.0;
      for (size_t k = 0; k < t.weights.size(); ++k) {
        const int j = std::clamp(t.first + int(k), 0, in_w - 1);
        acc += t.weights[k] * row[j];
      }
      out[x] = acc;
    }
  }

  const auto row_taps = axis_taps(in_h, out_h);
  std::vector<double> dst(size_t(out_h) * size_t(out_w));
  for (int y = 0; y < out_h; ++y) {
    const AxisTap& t = row_taps[size_t(y)];
    double* out = dst.data() + size_t(y) * size_t(out_w);
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (size_t k = 0; k < t.weights.size(); ++k) {
        const int j = std::clamp(t.first + int(k), 0, in_h - 1);
        acc += t.weights[k] * mid[size_t(j) * size_t(out_w) + size_t(x)];
      }
      out[x] = acc;
    }
  }
  return dst;
}

Tensor bicubic_resize(const Tensor& t, int out_h, int out_w) {
  Tensor out(t.n(), t.c(), out_h, out_w);
  std::vector<double> plane(size_t(t.h()) * size_t(t.w()));
  for (int n = 0; n < t.n(); ++n)
    for (int c = 0; c < t.c(); ++c) {
      const float* src = &t.at(n, c, 0, 0);
      for (size_t i = 0; i < plane.size(); ++i) plane[i] = double(src[i]);
      const auto resized = bicubic_resize_plane(plane, t.h(), t.w(), out_h, out_w);
      float* dst = &out.at(n, c, 0, 0);
      for (size_t i = 0; i < resized.size(); ++i) dst[i] = float(resized[i]);
    }
  return out;
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
  Image out(out_h, out_w);
  std::vector<double> plane(size_t(img.h) * size_t(img.w));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) plane[size_t(y) * size_t(img.w) + size_t(x)] = double(img.at(y, x, c));
    const auto resized = bicubic_resize_plane(plane, img.h, img.w, out_h, out_w);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        const double v = resized[size_t(y) * size_t(out_w) + size_t(x)];
        out.at(y, x, c) = uint8_t(std::lround(std::min(255.0, std::max(0.0, v))));
      }
  }
  return out;
}

}  // namespace lkdn
