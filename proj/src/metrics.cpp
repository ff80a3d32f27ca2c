#include "lkdn/metrics.hpp"

#include <cmath>
#include <limits>

#include "lkdn/common.hpp"

namespace lkdn {

namespace {

constexpr double kYR = 65.481, kYG = 128.553, kYB = 24.966, kYOff = 16.0;

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
};

Plane shaved_luminance(const Image& img, int shave) {
  if (img.h <= 2 * shave || img.w <= 2 * shave)
    throw ShapeError("metrics: image too small for shave border");
  Plane p;
  p.h = img.h - 2 * shave;
  p.w = img.w - 2 * shave;
  p.v.resize(size_t(p.h) * size_t(p.w));
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      const int sy = y + shave, sx = x + shave;
      const double r = img.at(sy, sx, 0) / 255.0;
      const double g = img.at(sy, sx, 1) / 255.0;
      const double b = img.at(sy, sx, 2) / 255.0;
      p.v[size_t(y) * size_t(p.w) + size_t(x)] = kYOff + kYR * r + kYG * g + kYB * b;
    }
  return p;
}

void check_dims(const Image& a, const Image& b, int shave) {
  if (a.h != b.h || a.w != b.w) throw ShapeError("metrics: image dimensions differ");
  if (shave < 0) throw UsageError("metrics: negative shave");
}

std::vector<double> gaussian_window(int radius, double sigma) {
  const int size = 2 * radius + 1;
  std::vector<double> w(size_t(size) * size_t(size));
  double sum = 0.0;
  for (int y = -radius; y <= radius; ++y)
    for (int x = -radius; x <= radius; ++x) {
      const double g = std::exp(-(y * y + x * x) / (2.0 * sigma * sigma));
      w[size_t(y + radius) * size_t(size) + size_t(x + radius)] = g;
      sum += g;
    }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace

Tensor rgb_to_y(const Tensor& rgb01) {
  if (rgb01.c() != 3) throw ShapeError("rgb_to_y expects 3 channels, got " + rgb01.shape_str());
  Tensor y(rgb01.n(), 1, rgb01.h(), rgb01.w());
  for (int n = 0; n < rgb01.n(); ++n)
    for (int i = 0; i < rgb01.h(); ++i)
      for (int j = 0; j < rgb01.w(); ++j)
        y.at(n, 0, i, j) = float(kYOff + kYR * double(rgb01.at(n, 0, i, j)) +
                                 kYG * double(rgb01.at(n, 1, i, j)) +
                                 kYB * double(rgb01.at(n, 2, i, j)));
  return y;
}

std::vector<double> luminance(const Image& img) {
  return shaved_luminance(img, 0).v;
}

double psnr(const Image& a, const Image& b, int shave) {
  check_dims(a, b, shave);
  const Plane pa = shaved_luminance(a, shave);
  const Plane pb = shaved_luminance(b, shave);
  double mse = 0.0;
  for (size_t i = 0; i < pa.v.size(); ++i) {
    const double d = pa.v[i] - pb.v[i];
    mse += d * d;
  }
  mse /= double(pa.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& a, const Image& b, int shave) {
  check_dims(a, b, shave);
  const Plane pa = shaved_luminance(a, shave);
  const Plane pb = shaved_luminance(b, shave);
  const int radius = 5;
  const int size = 2 * radius + 1;
  if (pa.h < size || pa.w < size) throw ShapeError("ssim: shaved image smaller than 11x11 window");
  static const std::vector<double> win = gaussian_window(radius, 1.5);

  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  int64_t count = 0;
  for (int y = 0; y + size <= pa.h; ++y)
    for (int x = 0; x + size <= pa.w; ++x) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int wy = 0; wy < size; ++wy)
        for (int wx = 0; wx < size; ++wx) {
          const double wgt = win[size_t(wy) * size_t(size) + size_t(wx)];
          mu_a += wgt * pa.v[size_t(y + wy) * size_t(pa.w) + size_t(x + wx)];
          mu_b += wgt * pb.v[size_t(y + wy) * size_t(pb.w) + size_t(x + wx)];
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int wy = 0; wy < size; ++wy)
        for (int wx = 0; wx < size; ++wx) {
          const double wgt = win[size_t(wy) * size_t(size) + size_t(wx)];
          const double da = pa.v[size_t(y + wy) * size_t(pa.w) + size_t(x + wx)] - mu_a;
          const double db = pb.v[size_t(y + wy) * size_t(pb.w) + size_t(x + wx)] - mu_b;
          var_a += wgt * da * da;
          var_b += wgt * db * db;
          cov += wgt * da * db;
        }
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  return total / double(count);
}

}  // namespace lkdn
