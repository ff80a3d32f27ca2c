#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "lkdn/checkpoint.hpp"
#include "lkdn/metrics.hpp"
#include "lkdn/reparam.hpp"
#include "lkdn/resize.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace lkdn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

// (c,h,w) or (n,c,h,w) float arrays; 3-d inputs get batch size 1.
Tensor tensor_from(const FloatArray& a, const char* what) {
  int n, c, h, w;
  if (a.ndim() == 4) {
    n = int(a.shape(0)), c = int(a.shape(1)), h = int(a.shape(2)), w = int(a.shape(3));
  } else if (a.ndim() == 3) {
    n = 1, c = int(a.shape(0)), h = int(a.shape(1)), w = int(a.shape(2));
  } else {
    throw ShapeError(std::string(what) + ": expected a (c,h,w) or (n,c,h,w) array, got " +
                     std::to_string(a.ndim()) + " dimensions");
  }
  Tensor t(n, c, h, w);
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(float));
  return t;
}

py::array_t<float> array_from(const Tensor& t, bool squeeze_batch) {
  std::vector<py::ssize_t> dims;
  if (squeeze_batch)
    dims = {t.c(), t.h(), t.w()};
  else
    dims = {t.n(), t.c(), t.h(), t.w()};
  py::array_t<float> out(dims);
  std::memcpy(out.mutable_data(), t.data.data(), t.data.size() * sizeof(float));
  return out;
}

Image image_from(const ByteArray& a, const char* what) {
  if (a.ndim() != 3 || a.shape(2) != 3)
    throw ShapeError(std::string(what) + ": expected an (h,w,3) uint8 array");
  Image img(int(a.shape(0)), int(a.shape(1)));
  std::memcpy(img.rgb.data(), a.data(), img.rgb.size());
  return img;
}

ByteArray image_to(const Image& img) {
  ByteArray out({py::ssize_t(img.h), py::ssize_t(img.w), py::ssize_t(3)});
  std::memcpy(out.mutable_data(), img.rgb.data(), img.rgb.size());
  return out;
}

Tensor channel_vector(const FloatArray& a, const char* what) {
  if (a.ndim() != 1) throw ShapeError(std::string(what) + ": expected a 1-d per-channel array");
  Tensor t(1, int(a.shape(0)), 1, 1);
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(float));
  return t;
}

// Preset name, or a dict of config keys ("preset" may appear as a base).
LKDNConfig config_from(const py::object& spec) {
  if (py::isinstance<py::str>(spec)) return LKDNConfig::preset(spec.cast<std::string>());
  if (py::isinstance<py::dict>(spec)) {
    std::map<std::string, std::string> kv;
    for (auto item : spec.cast<py::dict>()) {
      std::string v;
      if (py::isinstance<py::bool_>(item.second))
        v = item.second.cast<bool>() ? "1" : "0";
      else
        v = py::str(item.second).cast<std::string>();
      kv[py::str(item.first).cast<std::string>()] = v;
    }
    LKDNConfig cfg = config_from_kv(kv);
    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    return cfg;
  }
  throw UsageError("config must be a preset name or a dict of config keys");
}

py::dict config_to(const LKDNConfig& cfg) {
  py::dict d;
  d["scale"] = cfg.scale;
  d["num_blocks"] = cfg.num_blocks;
  d["channels"] = cfg.channels;
  d["attention_channels"] = cfg.attention_channels;
  d["input_replication"] = cfg.input_replication;
  d["refinement_variant"] = variant_name(cfg.variant);
  d["upsampler_reparam"] = cfg.upsampler_reparam;
  d["fused"] = cfg.fused;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "single-image super-resolution core: tensor ops, network, fusion, metrics";
  m.attr("__version__") = "0.1.0";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const NumericError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def(
      "conv2d",
      [](const FloatArray& x, const FloatArray& weight, const py::object& bias, int stride,
         int padding, int dilation, int groups) {
        if (weight.ndim() != 4)
          throw ShapeError("conv2d: weight must be (out_c, in_c/groups, kh, kw)");
        const bool squeeze = x.ndim() == 3;
        Tensor xt = tensor_from(x, "conv2d");
        Tensor wt(int(weight.shape(0)), int(weight.shape(1)), int(weight.shape(2)),
                  int(weight.shape(3)));
        std::memcpy(wt.data.data(), weight.data(), wt.data.size() * sizeof(float));

        ConvSpec s;
        s.in_channels = xt.c();
        s.out_channels = wt.n();
        s.kernel_h = wt.h();
        s.kernel_w = wt.w();
        s.stride = stride;
        s.padding = padding;
        s.dilation = dilation;
        s.groups = groups;
        s.has_bias = !bias.is_none();

        Tensor bt;
        const Tensor* bp = nullptr;
        if (s.has_bias) {
          bt = channel_vector(bias.cast<FloatArray>(), "conv2d bias");
          if (bt.c() != s.out_channels)
            throw ShapeError("conv2d: bias must have one entry per output channel");
          bp = &bt;
        }
        return array_from(conv2d(xt, wt, bp, s), squeeze);
      },
      "x"_a, "weight"_a, "bias"_a = py::none(), "stride"_a = 1, "padding"_a = 0, "dilation"_a = 1,
      "groups"_a = 1, "2-d convolution over (n,c,h,w); groups=c gives depthwise.");

  m.def(
      "pixel_shuffle",
      [](const FloatArray& x, int r) {
        return array_from(pixel_shuffle(tensor_from(x, "pixel_shuffle"), r), x.ndim() == 3);
      },
      "x"_a, "r"_a, "Rearranges r*r channel groups into an r-times larger spatial grid.");

  m.def(
      "pixel_unshuffle",
      [](const FloatArray& x, int r) {
        return array_from(pixel_unshuffle(tensor_from(x, "pixel_unshuffle"), r), x.ndim() == 3);
      },
      "x"_a, "r"_a);

  m.def(
      "gelu",
      [](const FloatArray& x) { return array_from(gelu(tensor_from(x, "gelu")), x.ndim() == 3); },
      "x"_a, "Exact (erf) GELU.");

  m.def(
      "pixel_norm",
      [](const FloatArray& x, const FloatArray& gamma, const FloatArray& beta, double eps) {
        return array_from(pixel_norm(tensor_from(x, "pixel_norm"),
                                     channel_vector(gamma, "pixel_norm gamma"),
                                     channel_vector(beta, "pixel_norm beta"), eps),
                          x.ndim() == 3);
      },
      "x"_a, "gamma"_a, "beta"_a, "eps"_a = kPixelNormEps,
      "Per-pixel normalization across channels with per-channel affine.");

  m.def(
      "bicubic_resize",
      [](const py::array& x, int out_h, int out_w) -> py::array {
        if (x.ndim() == 3 && x.shape(2) == 3 && py::isinstance<py::array_t<uint8_t>>(x))
          return image_to(bicubic_resize(image_from(x.cast<ByteArray>(), "bicubic_resize"),
                                         out_h, out_w));
        const FloatArray xf = x.cast<FloatArray>();
        return array_from(bicubic_resize(tensor_from(xf, "bicubic_resize"), out_h, out_w),
                          xf.ndim() == 3);
      },
      "x"_a, "out_h"_a, "out_w"_a,
      "Antialiased cubic resampling (a=-0.5). Accepts float (c,h,w)/(n,c,h,w) tensors "
      "or (h,w,3) uint8 images.");

  m.def(
      "psnr",
      [](const ByteArray& a, const ByteArray& b, int shave) {
        return psnr(image_from(a, "psnr"), image_from(b, "psnr"), shave);
      },
      "a"_a, "b"_a, "shave"_a = 0,
      "Luminance PSNR between (h,w,3) uint8 images, borders shaved first.");

  m.def(
      "ssim",
      [](const ByteArray& a, const ByteArray& b, int shave) {
        return ssim(image_from(a, "ssim"), image_from(b, "ssim"), shave);
      },
      "a"_a, "b"_a, "shave"_a = 0);

  m.def(
      "count_params", [](const py::object& config) { return count_params(config_from(config)); },
      "config"_a, "Trainable scalar count for a model config or preset name.");

  m.def(
      "count_multadds",
      [](const py::object& config, int gt_h, int gt_w) {
        return count_multadds(config_from(config), gt_h, gt_w);
      },
      "config"_a, "gt_h"_a = 720, "gt_w"_a = 1280,
      "Convolution multiply-accumulates for one forward pass at the given "
      "ground-truth size.");

  m.def(
      "attention_receptive_field",
      [](const py::object& config) { return attention_receptive_field(config_from(config)); },
      "config"_a);

  py::class_<Model>(m, "Model", "The super-resolution network: config plus named parameters.")
      .def_static(
          "init", [](const py::object& config, uint64_t seed) {
            return Model::init(config_from(config), seed);
          },
          "config"_a, "seed"_a = 0, "Fresh model with seeded fan-in-scaled uniform weights.")
      .def_static(
          "load",
          [](const std::string& path) {
            Checkpoint ck = Checkpoint::load(path);
            return Model{ck.cfg, ck.eval_params()};
          },
          "path"_a, "Model from a checkpoint, preferring EMA weights when present.")
      .def(
          "save",
          [](const Model& mod, const std::string& path) {
            Checkpoint ck;
            ck.cfg = mod.cfg;
            ck.params = mod.params;
            ck.save(path);
          },
          "path"_a, "Writes an inference checkpoint (no optimizer state).")
      .def(
          "forward",
          [](const Model& mod, const FloatArray& x) {
            return array_from(mod.forward(tensor_from(x, "forward")), x.ndim() == 3);
          },
          "x"_a, "Super-resolves a [0,1] float (3,h,w) or (n,3,h,w) array.")
      .def("__call__",
           [](const Model& mod, const FloatArray& x) {
             return array_from(mod.forward(tensor_from(x, "forward")), x.ndim() == 3);
           })
      .def("fuse",
           [](const Model& mod) {
             auto [fused, report] = fuse_model(mod);
             return py::make_tuple(std::move(fused),
                                   report.empty() ? std::string() : report.to_text());
           },
           "Folds re-parameterized branches into plain kernels; returns "
           "(fused_model, report_text).")
      .def("params",
           [](const Model& mod) {
             py::dict d;
             for (const auto& [name, t] : mod.params) d[name.c_str()] = array_from(t, false);
             return d;
           })
      .def_property_readonly("config", [](const Model& mod) { return config_to(mod.cfg); })
      .def_property_readonly("param_count",
                             [](const Model& mod) { return mod.params.scalar_count(); })
      .def("__repr__", [](const Model& mod) {
        return "Model(scale=" + std::to_string(mod.cfg.scale) +
               ", blocks=" + std::to_string(mod.cfg.num_blocks) +
               ", channels=" + std::to_string(mod.cfg.channels) + ", variant=" +
               variant_name(mod.cfg.variant) + (mod.cfg.fused ? ", fused" : "") + ", params=" +
               std::to_string(mod.params.scalar_count()) + ")";
      });
}
