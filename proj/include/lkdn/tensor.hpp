#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

#include "lkdn/common.hpp"
#include "lkdn/rng.hpp"

namespace lkdn {

// Rank-4 array, row-major (n, c, h, w). Values are float by default; the
// double instantiation exists for gradient checking and fusion proofs.
template <typename T>
struct TensorT {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  TensorT() = default;
  TensorT(int n, int c, int h, int w) : shape{n, c, h, w}, data(size_t(n) * c * h * w) {
    if (n < 1 || c < 1 || h < 1 || w < 1)
      throw ShapeError("tensor: all shape entries must be >= 1, got " + shape_str());
  }

  static TensorT zeros(int n, int c, int h, int w) { return TensorT(n, c, h, w); }

  static TensorT full(int n, int c, int h, int w, T v) {
    TensorT t(n, c, h, w);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static TensorT scalar(T v) { return full(1, 1, 1, 1, v); }

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  size_t numel() const { return data.size(); }

  T& at(int in, int ic, int iy, int ix) {
    return data[((size_t(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
  }
  const T& at(int in, int ic, int iy, int ix) const {
    return data[((size_t(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  std::string shape_str() const {
    return std::to_string(shape[0]) + "," + std::to_string(shape[1]) + "," +
           std::to_string(shape[2]) + "," + std::to_string(shape[3]);
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> o(shape[0], shape[1], shape[2], shape[3]);
    for (size_t i = 0; i < data.size(); ++i) o.data[i] = U(data[i]);
    return o;
  }

  TensorT& fill_uniform(Rng& rng, double lo, double hi) {
    for (auto& v : data) v = T(rng.uniform(lo, hi));
    return *this;
  }
  TensorT& fill_normal(Rng& rng) {
    for (auto& v : data) v = T(rng.normal());
    return *this;
  }
};

using Tensor = TensorT<float>;

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
  bool has_bias = false;

  void validate() const {
    if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1 ||
        dilation < 1 || groups < 1 || padding < 0)
      throw ConfigError("conv spec: non-positive field");
    if (in_channels % groups != 0)
      throw ConfigError("conv spec: in_channels " + std::to_string(in_channels) +
                        " not divisible by groups " + std::to_string(groups));
    if (out_channels % groups != 0)
      throw ConfigError("conv spec: out_channels " + std::to_string(out_channels) +
                        " not divisible by groups " + std::to_string(groups));
  }
};

// Same-padding spec helpers (the only padding scheme the network uses).
inline ConvSpec pointwise_spec(int in_c, int out_c, bool bias = false) {
  return ConvSpec{in_c, out_c, 1, 1, 1, 0, 1, 1, bias};
}
inline ConvSpec depthwise_spec(int c, int k, int dilation = 1, bool bias = false) {
  return ConvSpec{c, c, k, k, 1, dilation * (k - 1) / 2, dilation, c, bias};
}
inline ConvSpec dense_spec(int in_c, int out_c, int k, bool bias = false) {
  return ConvSpec{in_c, out_c, k, k, 1, (k - 1) / 2, 1, 1, bias};
}

inline std::array<int, 2> conv_out_dims(int h, int w, const ConvSpec& s) {
  int oh = (h + 2 * s.padding - s.dilation * (s.kernel_h - 1) - 1) / s.stride + 1;
  int ow = (w + 2 * s.padding - s.dilation * (s.kernel_w - 1) - 1) / s.stride + 1;
  return {oh, ow};
}

namespace detail {

template <typename T>
void check_conv_args(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                     const ConvSpec& s) {
  s.validate();
  if (x.c() != s.in_channels)
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) + " channels, spec expects " +
                     std::to_string(s.in_channels));
  if (w.shape[0] != s.out_channels)
    throw ShapeError("conv2d: weight dim 0 is " + std::to_string(w.shape[0]) +
                     ", spec out_channels is " + std::to_string(s.out_channels));
  if (w.shape[1] != s.in_channels / s.groups)
    throw ShapeError("conv2d: weight dim 1 is " + std::to_string(w.shape[1]) +
                     ", expected in_channels/groups = " +
                     std::to_string(s.in_channels / s.groups));
  if (w.shape[2] != s.kernel_h || w.shape[3] != s.kernel_w)
    throw ShapeError("conv2d: weight kernel dims " + std::to_string(w.shape[2]) + "x" +
                     std::to_string(w.shape[3]) + " do not match spec " +
                     std::to_string(s.kernel_h) + "x" + std::to_string(s.kernel_w));
  if (bias && (bias->c() != s.out_channels || bias->n() != 1 || bias->h() != 1 || bias->w() != 1))
    throw ShapeError("conv2d: bias shape " + bias->shape_str() + " must be 1," +
                     std::to_string(s.out_channels) + ",1,1");
  auto [oh, ow] = conv_out_dims(x.h(), x.w(), s);
  if (oh < 1 || ow < 1)
    throw ShapeError("conv2d: output spatial dims " + std::to_string(oh) + "x" +
                     std::to_string(ow) + " collapse below 1");
}

}  // namespace detail

// Cross-correlation (no kernel flip), zero padding. Weight layout is
// (out_channels, in_channels/groups, kernel_h, kernel_w). Accumulation is in
// double regardless of T, in a fixed order, so results are deterministic.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w,
                  std::type_identity_t<const TensorT<T>*> bias, const ConvSpec& s) {
  detail::check_conv_args(x, w, bias, s);
  const auto [oh, ow] = conv_out_dims(x.h(), x.w(), s);
  const int n = x.n(), h = x.h(), wd = x.w();
  const int icpg = s.in_channels / s.groups, ocpg = s.out_channels / s.groups;
  TensorT<T> out(n, s.out_channels, oh, ow);

  const bool is_pointwise = s.kernel_h == 1 && s.kernel_w == 1 && s.padding == 0 &&
                            s.stride == 1 && s.groups == 1;
  if (is_pointwise) {
    const size_t plane = size_t(h) * wd;
    std::vector<double> acc(plane);
    for (int in = 0; in < n; ++in) {
      for (int oc = 0; oc < s.out_channels; ++oc) {
        double b = bias ? double(bias->data[oc]) : 0.0;
        std::fill(acc.begin(), acc.end(), b);
        for (int ic = 0; ic < s.in_channels; ++ic) {
          const double wv = w.data[size_t(oc) * s.in_channels + ic];
          const T* xp = &x.at(in, ic, 0, 0);
          for (size_t i = 0; i < plane; ++i) acc[i] += wv * double(xp[i]);
        }
        T* op = &out.at(in, oc, 0, 0);
        for (size_t i = 0; i < plane; ++i) op[i] = T(acc[i]);
      }
    }
    return out;
  }

  for (int in = 0; in < n; ++in) {
    for (int g = 0; g < s.groups; ++g) {
      for (int ocl = 0; ocl < ocpg; ++ocl) {
        const int oc = g * ocpg + ocl;
        const double b = bias ? double(bias->data[oc]) : 0.0;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double acc = b;
            for (int ic = 0; ic < icpg; ++ic) {
              const T* wrow = &w.at(oc, ic, 0, 0);
              const T* xplane = &x.at(in, g * icpg + ic, 0, 0);
              for (int ky = 0; ky < s.kernel_h; ++ky) {
                const int iy = oy * s.stride - s.padding + ky * s.dilation;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < s.kernel_w; ++kx) {
                  const int ix = ox * s.stride - s.padding + kx * s.dilation;
                  if (ix < 0 || ix >= wd) continue;
                  acc += double(wrow[ky * s.kernel_w + kx]) * double(xplane[size_t(iy) * wd + ix]);
                }
              }
            }
            out.at(in, oc, oy, ox) = T(acc);
          }
        }
      }
    }
  }
  return out;
}

// Accumulates gradients into any non-null output (pre-sized, typically
// zero-initialized or holding a prior accumulation).
template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, const ConvSpec& s,
                     const TensorT<T>& grad_out, TensorT<T>* grad_x, TensorT<T>* grad_w,
                     TensorT<T>* grad_b) {
  const auto [oh, ow] = conv_out_dims(x.h(), x.w(), s);
  const int n = x.n(), h = x.h(), wd = x.w();
  const int icpg = s.in_channels / s.groups, ocpg = s.out_channels / s.groups;

  if (grad_x) {
    for (int in = 0; in < n; ++in)
      for (int g = 0; g < s.groups; ++g)
        for (int ocl = 0; ocl < ocpg; ++ocl) {
          const int oc = g * ocpg + ocl;
          for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
              const double go = grad_out.at(in, oc, oy, ox);
              for (int ic = 0; ic < icpg; ++ic) {
                const T* wrow = &w.at(oc, ic, 0, 0);
                T* gxp = &grad_x->at(in, g * icpg + ic, 0, 0);
                for (int ky = 0; ky < s.kernel_h; ++ky) {
                  const int iy = oy * s.stride - s.padding + ky * s.dilation;
                  if (iy < 0 || iy >= h) continue;
                  for (int kx = 0; kx < s.kernel_w; ++kx) {
                    const int ix = ox * s.stride - s.padding + kx * s.dilation;
                    if (ix < 0 || ix >= wd) continue;
                    gxp[size_t(iy) * wd + ix] += T(go * double(wrow[ky * s.kernel_w + kx]));
                  }
                }
              }
            }
        }
  }

  if (grad_w) {
    for (int g = 0; g < s.groups; ++g)
      for (int ocl = 0; ocl < ocpg; ++ocl) {
        const int oc = g * ocpg + ocl;
        for (int ic = 0; ic < icpg; ++ic)
          for (int ky = 0; ky < s.kernel_h; ++ky)
            for (int kx = 0; kx < s.kernel_w; ++kx) {
              double acc = 0.0;
              for (int in = 0; in < n; ++in) {
                const T* gop = &grad_out.at(in, oc, 0, 0);
                const T* xplane = &x.at(in, g * icpg + ic, 0, 0);
                for (int oy = 0; oy < oh; ++oy) {
                  const int iy = oy * s.stride - s.padding + ky * s.dilation;
                  if (iy < 0 || iy >= h) continue;
                  for (int ox = 0; ox < ow; ++ox) {
                    const int ix = ox * s.stride - s.padding + kx * s.dilation;
                    if (ix < 0 || ix >= wd) continue;
                    acc += double(gop[size_t(oy) * ow + ox]) * double(xplane[size_t(iy) * wd + ix]);
                  }
                }
              }
              grad_w->at(oc, ic, ky, kx) += T(acc);
            }
      }
  }

  if (grad_b) {
    for (int oc = 0; oc < s.out_channels; ++oc) {
      double acc = 0.0;
      for (int in = 0; in < n; ++in) {
        const T* gop = &grad_out.at(in, oc, 0, 0);
        for (size_t i = 0; i < size_t(oh) * ow; ++i) acc += double(gop[i]);
      }
      grad_b->data[oc] += T(acc);
    }
  }
}

// out[b, c, y*r+i, x*r+j] = in[b, c*r*r + i*r + j, y, x]
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int r) {
  if (r < 1) throw ConfigError("pixel_shuffle: factor must be >= 1");
  if (x.c() % (r * r) != 0)
    throw ShapeError("pixel_shuffle: channels " + std::to_string(x.c()) +
                     " not divisible by r*r = " + std::to_string(r * r));
  TensorT<T> out(x.n(), x.c() / (r * r), x.h() * r, x.w() * r);
  for (int in = 0; in < x.n(); ++in)
    for (int oc = 0; oc < out.c(); ++oc)
      for (int y = 0; y < x.h(); ++y)
        for (int xx = 0; xx < x.w(); ++xx)
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
              out.at(in, oc, y * r + i, xx * r + j) = x.at(in, oc * r * r + i * r + j, y, xx);
  return out;
}

template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x, int r) {
  if (r < 1) throw ConfigError("pixel_unshuffle: factor must be >= 1");
  if (x.h() % r != 0 || x.w() % r != 0)
    throw ShapeError("pixel_unshuffle: spatial dims not divisible by r");
  TensorT<T> out(x.n(), x.c() * r * r, x.h() / r, x.w() / r);
  for (int in = 0; in < x.n(); ++in)
    for (int ic = 0; ic < x.c(); ++ic)
      for (int y = 0; y < out.h(); ++y)
        for (int xx = 0; xx < out.w(); ++xx)
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
              out.at(in, ic * r * r + i * r + j, y, xx) = x.at(in, ic, y * r + i, xx * r + j);
  return out;
}

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476));
}

inline double gelu_grad_scalar(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
  const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014327;
  return cdf + x * pdf;
}

// x * Phi(x), exact erf form.
template <typename T>
TensorT<T> gelu(const TensorT<T>& x) {
  TensorT<T> out = x;
  for (auto& v : out.data) v = T(gelu_scalar(double(v)));
  return out;
}

template <typename T>
TensorT<T> concat_channels(const std::vector<const TensorT<T>*>& parts) {
  if (parts.empty()) throw UsageError("concat_channels: no inputs");
  int n = parts[0]->n(), h = parts[0]->h(), w = parts[0]->w(), c = 0;
  for (const auto* p : parts) {
    if (p->n() != n || p->h() != h || p->w() != w)
      throw ShapeError("concat_channels: part shape " + p->shape_str() +
                       " disagrees with first part " + parts[0]->shape_str() +
                       " outside the channel dimension");
    c += p->c();
  }
  TensorT<T> out(n, c, h, w);
  const size_t plane = size_t(h) * w;
  for (int in = 0; in < n; ++in) {
    int co = 0;
    for (const auto* p : parts) {
      std::memcpy(&out.at(in, co, 0, 0), &p->at(in, 0, 0, 0), sizeof(T) * plane * p->c());
      co += p->c();
    }
  }
  return out;
}

template <typename T>
TensorT<T> slice_channels(const TensorT<T>& x, int c0, int c1) {
  if (c0 < 0 || c1 > x.c() || c0 >= c1) throw UsageError("slice_channels: bad channel range");
  TensorT<T> out(x.n(), c1 - c0, x.h(), x.w());
  const size_t plane = size_t(x.h()) * x.w();
  for (int in = 0; in < x.n(); ++in)
    std::memcpy(&out.at(in, 0, 0, 0), &x.at(in, c0, 0, 0), sizeof(T) * plane * (c1 - c0));
  return out;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("add: shapes " + a.shape_str() + " and " + b.shape_str() + " differ");
  TensorT<T> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("mul: shapes " + a.shape_str() + " and " + b.shape_str() + " differ");
  TensorT<T> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

// Per spatial position: normalize across channels, then gamma*v + beta.
// gamma/beta are (1, c, 1, 1).
template <typename T>
TensorT<T> pixel_norm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                      double eps) {
  const int c = x.c();
  if (gamma.numel() != size_t(c) || beta.numel() != size_t(c))
    throw ShapeError("pixel_norm: affine length " + std::to_string(gamma.numel()) +
                     " does not match channel count " + std::to_string(c));
  TensorT<T> out(x.n(), c, x.h(), x.w());
  const size_t plane = size_t(x.h()) * x.w();
  for (int in = 0; in < x.n(); ++in) {
    const T* base = &x.at(in, 0, 0, 0);
    T* obase = &out.at(in, 0, 0, 0);
    for (size_t i = 0; i < plane; ++i) {
      double mean = 0.0;
      for (int ic = 0; ic < c; ++ic) mean += double(base[ic * plane + i]);
      mean /= c;
      double var = 0.0;
      for (int ic = 0; ic < c; ++ic) {
        const double d = double(base[ic * plane + i]) - mean;
        var += d * d;
      }
      var /= c;
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int ic = 0; ic < c; ++ic) {
        const double xh = (double(base[ic * plane + i]) - mean) * inv;
        obase[ic * plane + i] = T(double(gamma.data[ic]) * xh + double(beta.data[ic]));
      }
    }
  }
  return out;
}

template <typename T>
void pixel_norm_backward(const TensorT<T>& x, const TensorT<T>& gamma, double eps,
                         const TensorT<T>& grad_out, TensorT<T>* grad_x, TensorT<T>* grad_gamma,
                         TensorT<T>* grad_beta) {
  const int c = x.c();
  const size_t plane = size_t(x.h()) * x.w();
  std::vector<double> xh(c), u(c);
  for (int in = 0; in < x.n(); ++in) {
    const T* base = &x.at(in, 0, 0, 0);
    const T* gbase = &grad_out.at(in, 0, 0, 0);
    T* gxbase = grad_x ? &grad_x->at(in, 0, 0, 0) : nullptr;
    for (size_t i = 0; i < plane; ++i) {
      double mean = 0.0;
      for (int ic = 0; ic < c; ++ic) mean += double(base[ic * plane + i]);
      mean /= c;
      double var = 0.0;
      for (int ic = 0; ic < c; ++ic) {
        const double d = double(base[ic * plane + i]) - mean;
        var += d * d;
      }
      var /= c;
      const double inv = 1.0 / std::sqrt(var + eps);
      double mu_u = 0.0, mu_uxh = 0.0;
      for (int ic = 0; ic < c; ++ic) {
        xh[ic] = (double(base[ic * plane + i]) - mean) * inv;
        u[ic] = double(gamma.data[ic]) * double(gbase[ic * plane + i]);
        mu_u += u[ic];
        mu_uxh += u[ic] * xh[ic];
      }
      mu_u /= c;
      mu_uxh /= c;
      for (int ic = 0; ic < c; ++ic) {
        const double dy = double(gbase[ic * plane + i]);
        if (gxbase) gxbase[ic * plane + i] += T((u[ic] - mu_u - xh[ic] * mu_uxh) * inv);
        if (grad_gamma) grad_gamma->data[ic] += T(dy * xh[ic]);
        if (grad_beta) grad_beta->data[ic] += T(dy);
      }
    }
  }
}

template <typename T>
double sum_all(const TensorT<T>& x) {
  double s = 0.0;
  for (const auto& v : x.data) s += double(v);
  return s;
}

template <typename T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff: shapes " + a.shape_str() + " and " + b.shape_str() +
                     " differ");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
  return m;
}

// Mean absolute / mean squared error over all elements.
template <typename T>
double l1_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target))
    throw ShapeError("l1_loss: shapes " + pred.shape_str() + " and " + target.shape_str() +
                     " differ");
  double s = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i)
    s += std::abs(double(pred.data[i]) - double(target.data[i]));
  return s / double(pred.numel());
}

template <typename T>
double l2_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target))
    throw ShapeError("l2_loss: shapes " + pred.shape_str() + " and " + target.shape_str() +
                     " differ");
  double s = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = double(pred.data[i]) - double(target.data[i]);
    s += d * d;
  }
  return s / double(pred.numel());
}

}  // namespace lkdn
