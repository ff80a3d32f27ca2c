// Acceptance gate: every release-blocking property, one printed line each.
// Exit status is non-zero when any criterion fails; skipped criteria (missing
// optional datasets) do not fail the gate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lkdn/checkpoint.hpp"
#include "lkdn/metrics.hpp"
#include "lkdn/reparam.hpp"
#include "lkdn/train.hpp"
#include "oracles.hpp"

using namespace lkdn;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double measured, double target) {
  return fmt("%+.2f%%", (measured - target) / target * 100.0);
}

template <typename T = float>
TensorT<T> rand_tensor(int n, int c, int h, int w, uint64_t seed, double lo = -1.0,
                       double hi = 1.0) {
  Rng rng(seed);
  TensorT<T> t(n, c, h, w);
  t.fill_uniform(rng, lo, hi);
  return t;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = fs::temp_directory_path() / ("lkdn-acc-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- criterion 1: branch fusion is behavior-preserving ----------------------

template <typename T>
ParamStoreT<T> rbsb_train_params(int c, uint64_t seed) {
  ParamStoreT<T> s;
  s.add("r.pw.weight", rand_tensor<T>(c, c, 1, 1, seed));
  s.add("r.pw.bias", rand_tensor<T>(1, c, 1, 1, seed + 1));
  s.add("r.dw3.weight", rand_tensor<T>(c, 1, 3, 3, seed + 2));
  s.add("r.dw3.bias", rand_tensor<T>(1, c, 1, 1, seed + 3));
  s.add("r.dw1.weight", rand_tensor<T>(c, 1, 1, 1, seed + 4));
  s.add("r.dw1.bias", rand_tensor<T>(1, c, 1, 1, seed + 5));
  return s;
}

template <typename T>
ParamStoreT<T> rbsb_fused_params(const ParamStoreT<T>& train) {
  ParamStoreT<T> out;
  out.add("r.pw.weight", fuse_pointwise_identity(train.get("r.pw.weight")));
  out.add("r.pw.bias", train.get("r.pw.bias"));
  auto [kw, kb] = fuse_depthwise_branches(train.get("r.dw3.weight"), train.get("r.dw1.weight"),
                                          &train.get("r.dw3.bias"), &train.get("r.dw1.bias"));
  out.add("r.dw3.weight", std::move(kw));
  out.add("r.dw3.bias", std::move(kb));
  return out;
}

template <typename T>
double rbsb_worst_gap(int c, uint64_t seed, int draws, int probes_per_draw) {
  DirectEval<T> cx;
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    ParamStoreT<T> train = rbsb_train_params<T>(c, seed + uint64_t(d) * 100);
    ParamStoreT<T> fused = rbsb_fused_params(train);
    DirectParams<T> pt{train}, pf{fused};
    for (int rep = 0; rep < probes_per_draw; ++rep) {
      TensorT<T> x = rand_tensor<T>(1, c, 12, 12, seed + uint64_t(d) * 100 + uint64_t(rep) + 7);
      worst = std::max(worst, max_abs_diff(blocks::rbsb_preact(cx, pt, "r", x, false),
                                           blocks::rbsb_preact(cx, pf, "r", x, true)));
    }
  }
  return worst;
}

Outcome criterion1() {
  double worst32 = 0.0, worst64 = 0.0;
  for (int c : {1, 4, 42, 56}) {
    worst32 = std::max(worst32, rbsb_worst_gap<float>(c, 1000 + uint64_t(c), 4, 25));
    worst64 = std::max(worst64, rbsb_worst_gap<double>(c, 2000 + uint64_t(c), 4, 25));
  }

  Model m = Model::init(LKDNConfig::preset("lkdn-s"), 7);
  auto [fused, report] = fuse_model(m);
  DirectEval<float> cx;
  DirectParams<float> pt{m.params}, pf{fused.params};
  Rng rng(fnv1a64("acceptance-lkdn-s-probes"));
  double worst_e2e = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Tensor x(1, 3, 48, 48);
    x.fill_uniform(rng, 0.0, 1.0);
    worst_e2e = std::max(worst_e2e, max_abs_diff(lkdn_forward(cx, pt, m.cfg, x),
                                                 lkdn_forward(cx, pf, fused.cfg, x)));
  }

  const bool ok = worst32 <= 1e-5 && worst64 <= 1e-10 && worst_e2e <= 1e-4;
  return {ok ? Status::Pass : Status::Fail,
          "refinement preact widths {1,4,42,56} x100 inputs: f32 " + fmt("%.2e", worst32) +
              " (tol 1e-5), f64 " + fmt("%.2e", worst64) + " (tol 1e-10); lkdn-s end-to-end x10: " +
              fmt("%.2e", worst_e2e) + " (tol 1e-4)"};
}

// --- criterion 2: parameter accounting ---------------------------------------

Outcome criterion2() {
  LKDNConfig x4 = LKDNConfig::preset("lkdn");
  LKDNConfig x3 = x4;
  x3.scale = 3;
  LKDNConfig x2 = x4;
  x2.scale = 2;
  LKDNConfig s = LKDNConfig::preset("lkdn-s");
  s.fused = true;

  const int64_t p4 = count_params(x4), p3 = count_params(x3), p2 = count_params(x2);
  const int64_t ps = count_params(s);
  const int64_t delta = p4 - p2;
  const int64_t expect_delta = 3LL * x4.channels * 9 * (4 * 4 - 2 * 2);

  auto within = [](int64_t v, double t) { return std::abs(double(v) - t) / t <= 0.05; };
  const bool ok = within(p4, 322e3) && within(p3, 311e3) && within(p2, 304e3) &&
                  within(ps, 129e3) && delta == expect_delta;
  return {ok ? Status::Pass : Status::Fail,
          "params x4 " + std::to_string(p4) + " (" + pct(double(p4), 322e3) + " of 322K), x3 " +
              std::to_string(p3) + " (" + pct(double(p3), 311e3) + "), x2 " + std::to_string(p2) +
              " (" + pct(double(p2), 304e3) + "), small fused " + std::to_string(ps) + " (" +
              pct(double(ps), 129e3) + " of 129K); x4-x2 delta " + std::to_string(delta) +
              (delta == expect_delta ? " == " : " != ") + std::to_string(expect_delta) +
              " (reconstruction conv closed form)"};
}

// --- criterion 3: multiply-add accounting ------------------------------------

Outcome criterion3() {
  LKDNConfig x4 = LKDNConfig::preset("lkdn");
  LKDNConfig x3 = x4;
  x3.scale = 3;
  LKDNConfig x2 = x4;
  x2.scale = 2;
  LKDNConfig s = LKDNConfig::preset("lkdn-s");
  s.fused = true;

  const double m4 = double(count_multadds(x4)), m3 = double(count_multadds(x3));
  const double m2 = double(count_multadds(x2)), ms = double(count_multadds(s));

  auto within = [](double v, double t) { return std::abs(v - t) / t <= 0.05; };
  const bool ok = within(m4, 18.3e9) && within(m3, 31.4e9) && within(m2, 69.1e9) &&
                  within(ms, 7.3e9);
  return {ok ? Status::Pass : Status::Fail,
          "multi-adds at 1280x720 GT: x4 " + fmt("%.2f", m4 / 1e9) + "G (" + pct(m4, 18.3e9) +
              " of 18.3G), x3 " + fmt("%.2f", m3 / 1e9) + "G (" + pct(m3, 31.4e9) + "), x2 " +
              fmt("%.2f", m2 / 1e9) + "G (" + pct(m2, 69.1e9) + "), small fused " +
              fmt("%.2f", ms / 1e9) + "G (" + pct(ms, 7.3e9) + " of 7.3G)"};
}

// --- criterion 4: bicubic baseline on Set5 -----------------------------------

Outcome criterion4() {
  std::string dir = "data/Set5";
  if (const char* env = std::getenv("LKDN_SET5_DIR"); env && *env) dir = env;
  if (!fs::is_directory(dir))
    return {Status::Skip, "Set5 not present (place HR PNGs in data/Set5 or set LKDN_SET5_DIR)"};

  const EvalTable t = evaluate_dir(nullptr, dir, "", 4);
  const bool ok = std::abs(t.mean_psnr - 28.42) <= 0.05 && std::abs(t.mean_ssim - 0.8104) <= 0.003;
  return {ok ? Status::Pass : Status::Fail,
          "bicubic x4 on " + std::to_string(t.rows.size()) + " images: PSNR " +
              fmt("%.4f", t.mean_psnr) + " (target 28.42 +/- 0.05), SSIM " +
              fmt("%.5f", t.mean_ssim) + " (target 0.8104 +/- 0.003)"};
}

// --- criterion 5: finite-difference gradients --------------------------------

struct FdCheck {
  std::string name;
  double rel;
};

Outcome criterion5() {
  std::vector<FdCheck> checks;
  auto run = [&](const std::string& name, auto&& fn, const ParamStoreT<double>& params) {
    checks.push_back({name, grad_check(fn, params)});
  };
  auto seed_of = [](const char* name) { return fnv1a64(name); };

  auto conv_fd = [&](const char* name, ConvSpec spec, int xh, int xw, std::array<int, 4> wshape) {
    ParamStoreT<double> p;
    p.add("x", rand_tensor<double>(1, spec.in_channels, xh, xw, seed_of(name)));
    p.add("w", rand_tensor<double>(wshape[0], wshape[1], wshape[2], wshape[3], seed_of(name) + 1,
                                   -0.5, 0.5));
    if (spec.has_bias) p.add("b", rand_tensor<double>(1, spec.out_channels, 1, 1, seed_of(name) + 2));
    run(name, [spec](auto& cx, auto& pp) {
      const auto* b = spec.has_bias ? &pp.get("b") : nullptr;
      return cx.sum(cx.gelu(cx.conv2d(pp.get("x"), pp.get("w"), b, spec)));
    }, p);
  };
  conv_fd("conv 1x1 pointwise", pointwise_spec(3, 4, true), 6, 6, {4, 3, 1, 1});
  conv_fd("conv 3x3 depthwise", depthwise_spec(4, 3, 1, true), 6, 6, {4, 1, 3, 3});
  conv_fd("conv 1x1 depthwise", depthwise_spec(4, 1), 5, 5, {4, 1, 1, 1});
  conv_fd("conv 5x5 depthwise", depthwise_spec(3, 5), 8, 8, {3, 1, 5, 5});
  conv_fd("conv 5x5 depthwise dil3", depthwise_spec(3, 5, 3), 14, 14, {3, 1, 5, 5});
  conv_fd("conv 3x3 dense", dense_spec(3, 2, 3), 6, 6, {2, 3, 3, 3});

  {
    ParamStoreT<double> p;
    p.add("x", rand_tensor<double>(1, 3, 5, 5, seed_of("gelu")));
    run("gelu", [](auto& cx, auto& pp) { return cx.sum(cx.gelu(pp.get("x"))); }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("x", rand_tensor<double>(1, 8, 4, 4, seed_of("shuffle")));
    TensorT<double> target = rand_tensor<double>(1, 2, 8, 8, seed_of("shuffle") + 1);
    run("pixel shuffle", [target](auto& cx, auto& pp) {
      return cx.l2(cx.pixel_shuffle(pp.get("x"), 2), cx.constant(target));
    }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("a", rand_tensor<double>(1, 3, 4, 4, seed_of("addmul")));
    p.add("b", rand_tensor<double>(1, 3, 4, 4, seed_of("addmul") + 1));
    run("add and mul", [](auto& cx, auto& pp) {
      return cx.sum(cx.mul(cx.add(pp.get("a"), pp.get("b")), pp.get("b")));
    }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("a", rand_tensor<double>(1, 2, 4, 4, seed_of("concat")));
    p.add("b", rand_tensor<double>(1, 3, 4, 4, seed_of("concat") + 1));
    TensorT<double> target = rand_tensor<double>(1, 5, 4, 4, seed_of("concat") + 2, 2.0, 3.0);
    run("concat", [target](auto& cx, auto& pp) {
      return cx.l1(cx.concat({cx.gelu(pp.get("a")), pp.get("b")}), cx.constant(target));
    }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("x", rand_tensor<double>(1, 4, 3, 3, seed_of("pnorm")));
    p.add("gamma", rand_tensor<double>(1, 4, 1, 1, seed_of("pnorm") + 1, 0.5, 1.5));
    p.add("beta", rand_tensor<double>(1, 4, 1, 1, seed_of("pnorm") + 2, -0.3, 0.3));
    TensorT<double> target = rand_tensor<double>(1, 4, 3, 3, seed_of("pnorm") + 3);
    run("pixel norm", [target](auto& cx, auto& pp) {
      return cx.l2(cx.pixel_norm(pp.get("x"), pp.get("gamma"), pp.get("beta"), kPixelNormEps),
                   cx.constant(target));
    }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("pred", rand_tensor<double>(1, 3, 4, 4, seed_of("l1")));
    TensorT<double> target = rand_tensor<double>(1, 3, 4, 4, seed_of("l1") + 1, 2.0, 3.0);
    run("l1 loss", [target](auto& cx, auto& pp) {
      return cx.l1(pp.get("pred"), cx.constant(target));
    }, p);
    run("l2 loss", [target](auto& cx, auto& pp) {
      return cx.l2(pp.get("pred"), cx.constant(target));
    }, p);
  }

  // blocks, parameterized exactly as the network addresses them
  auto block_store = [&](int c, const char* tag, bool with_dw1_bias) {
    ParamStoreT<double> p;
    p.add("s.pw.weight", rand_tensor<double>(c, c, 1, 1, seed_of(tag), -0.4, 0.4));
    p.add("s.pw.bias", rand_tensor<double>(1, c, 1, 1, seed_of(tag) + 1, -0.2, 0.2));
    p.add("s.dw3.weight", rand_tensor<double>(c, 1, 3, 3, seed_of(tag) + 2, -0.4, 0.4));
    p.add("s.dw3.bias", rand_tensor<double>(1, c, 1, 1, seed_of(tag) + 3, -0.2, 0.2));
    if (with_dw1_bias) {
      p.add("s.dw1.weight", rand_tensor<double>(c, 1, 1, 1, seed_of(tag) + 4, -0.4, 0.4));
      p.add("s.dw1.bias", rand_tensor<double>(1, c, 1, 1, seed_of(tag) + 5, -0.2, 0.2));
    }
    p.add("x", rand_tensor<double>(1, c, 6, 6, seed_of(tag) + 6));
    return p;
  };
  {
    ParamStoreT<double> p;
    p.add("s.pw.weight", rand_tensor<double>(4, 3, 1, 1, seed_of("bsconv"), -0.4, 0.4));
    p.add("s.dw.weight", rand_tensor<double>(4, 1, 3, 3, seed_of("bsconv") + 1, -0.4, 0.4));
    p.add("x", rand_tensor<double>(1, 3, 6, 6, seed_of("bsconv") + 2));
    run("bsconv block", [](auto& cx, auto& pp) {
      return cx.sum(cx.gelu(blocks::bsconv(cx, pp, "s", pp.get("x"), 3)));
    }, p);
  }
  {
    ParamStoreT<double> p;
    p.add("s.pw.weight", rand_tensor<double>(3, 3, 1, 1, seed_of("bsb"), -0.4, 0.4));
    p.add("s.dw.weight", rand_tensor<double>(3, 1, 3, 3, seed_of("bsb") + 1, -0.4, 0.4));
    p.add("x", rand_tensor<double>(1, 3, 6, 6, seed_of("bsb") + 2));
    run("bsb block", [](auto& cx, auto& pp) {
      return cx.sum(blocks::bsb(cx, pp, "s", pp.get("x")));
    }, p);
    run("bsrb block", [](auto& cx, auto& pp) {
      return cx.sum(blocks::bsrb(cx, pp, "s", pp.get("x")));
    }, p);
  }
  run("rbsb block", [](auto& cx, auto& pp) {
    return cx.sum(blocks::rbsb(cx, pp, "s", pp.get("x"), false));
  }, block_store(3, "rbsb", true));
  {
    ParamStoreT<double> p;
    p.add("a.pw.weight", rand_tensor<double>(4, 4, 1, 1, seed_of("lka"), -0.4, 0.4));
    p.add("a.dw.weight", rand_tensor<double>(4, 1, 5, 5, seed_of("lka") + 1, -0.3, 0.3));
    p.add("a.dwd.weight", rand_tensor<double>(4, 1, 5, 5, seed_of("lka") + 2, -0.3, 0.3));
    p.add("x", rand_tensor<double>(1, 4, 14, 14, seed_of("lka") + 3));
    TensorT<double> target = rand_tensor<double>(1, 4, 14, 14, seed_of("lka") + 4);
    run("lka block", [target](auto& cx, auto& pp) {
      return cx.l2(blocks::lka(cx, pp, "a", pp.get("x")), cx.constant(target));
    }, p);
  }

  auto model_fill = [&](uint64_t seed) {
    return [seed](const ParamDef& d, TensorT<double>& t) {
      if (d.kind == ParamDef::NormAffine) {
        for (auto& v : t.data) v = d.init_const;
      } else {
        Rng r(derive_seed(seed, fnv1a64(d.name)));
        t.fill_uniform(r, -0.4, 0.4);
      }
    };
  };
  {
    LKDNConfig cfg{2, 1, 4, 4, 1, Variant::RBSB, false, false};
    ParamStoreT<double> p = Model::build_store<double>(cfg, model_fill(31));
    p.add("x", rand_tensor<double>(1, 4, 6, 6, seed_of("lkdb")));
    TensorT<double> target = rand_tensor<double>(1, 4, 6, 6, seed_of("lkdb") + 1);
    run("lkdb block", [target, &cfg](auto& cx, auto& pp) {
      return cx.l2(blocks::lkdb(cx, pp, "block0", pp.get("x"), cfg.variant, false),
                   cx.constant(target));
    }, p);
  }
  {
    LKDNConfig cfg{2, 1, 4, 4, 2, Variant::RBSB, true, false};
    ParamStoreT<double> p = Model::build_store<double>(cfg, model_fill(32));
    p.add("x", rand_tensor<double>(1, 3, 6, 6, seed_of("model"), 0.0, 1.0));
    TensorT<double> target = rand_tensor<double>(1, 3, 12, 12, seed_of("model") + 1, 2.0, 3.0);
    run("full network", [target, cfg](auto& cx, auto& pp) {
      return cx.l1(lkdn_forward(cx, pp, cfg, pp.get("x")), cx.constant(target));
    }, p);
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : checks)
    if (c.rel > worst) {
      worst = c.rel;
      worst_name = c.name;
    }
  const bool ok = worst <= 1e-4;
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(checks.size()) + " finite-difference checks, worst " + fmt("%.2e", worst) +
              " rel (" + worst_name + ", tol 1e-4)"};
}

// --- criterion 6: convolution vs the brute-force oracle ----------------------

Outcome criterion6() {
  struct Case {
    const char* name;
    ConvSpec spec;
  };
  const Case cases[] = {
      {"1x1 pointwise", pointwise_spec(8, 12)}, {"3x3 depthwise", depthwise_spec(6, 3)},
      {"1x1 depthwise", depthwise_spec(6, 1)},  {"5x5 depthwise", depthwise_spec(4, 5)},
      {"5x5 depthwise dil3", depthwise_spec(4, 5, 3)}, {"3x3 dense", dense_spec(5, 7, 3)},
  };

  double worst = 0.0;
  std::string worst_name;
  Rng rng(fnv1a64("acceptance-conv-oracle"));
  for (const auto& c : cases) {
    for (int rep = 0; rep < 50; ++rep) {
      ConvSpec spec = c.spec;
      spec.has_bias = rep % 2 == 1;
      const int n = rng.uniform_int(1, 3), h = rng.uniform_int(5, 17), w = rng.uniform_int(5, 17);
      Tensor x = rand_tensor(n, spec.in_channels, h, w, rng.next());
      Tensor wt = rand_tensor(spec.out_channels, spec.in_channels / spec.groups, spec.kernel_h,
                              spec.kernel_w, rng.next());
      Tensor b = rand_tensor(1, spec.out_channels, 1, 1, rng.next());
      const Tensor* bias = spec.has_bias ? &b : nullptr;

      Tensor got = conv2d(x, wt, bias, spec);
      Tensor want = oracle::conv2d(x, wt, bias, spec);
      double scale = 1e-12, diff = 0.0;
      for (size_t i = 0; i < got.data.size(); ++i) {
        scale = std::max({scale, std::abs(double(want.data[i])), std::abs(double(got.data[i]))});
        diff = std::max(diff, std::abs(double(got.data[i]) - double(want.data[i])));
      }
      if (diff / scale > worst) {
        worst = diff / scale;
        worst_name = c.name;
      }
    }
  }
  const bool ok = worst <= 1e-6;
  const std::string where = worst_name.empty() ? "" : " (" + worst_name + ")";
  return {ok ? Status::Pass : Status::Fail, "6 configurations x 50 cases, worst " +
                                                fmt("%.2e", worst) + " rel" + where + ", tol 1e-6"};
}

// --- criterion 7: optimizer steps --------------------------------------------

template <typename Opt>
double scalar_first_step(double theta0, double g, double lr) {
  ParamStoreT<double> p;
  p.add("t", TensorT<double>::scalar(theta0));
  Opt opt;
  opt.lr = lr;
  GradMapT<double> gm;
  gm["t"] = TensorT<double>::scalar(g);
  opt.step(p, gm);
  return p.get("t").data[0];
}

Outcome criterion7() {
  // With zeroed state both updates reduce to theta - lr * g / (|g| + eps).
  double worst = 0.0;
  for (auto [theta0, g, lr] : {std::array<double, 3>{1.0, 1.0, 0.1},
                               std::array<double, 3>{2.0, -0.5, 0.05}}) {
    const double expect = theta0 - lr * g / (std::abs(g) + 1e-8);
    worst = std::max(worst, std::abs(scalar_first_step<AdanT<double>>(theta0, g, lr) - expect));
    worst = std::max(worst, std::abs(scalar_first_step<AdamT<double>>(theta0, g, lr) - expect));
  }

  const auto adan = quadratic_curve<AdanT>(1.0, 0.01, 2000);
  const auto adam = quadratic_curve<AdamT>(1.0, 0.01, 2000);
  auto first_below = [](const std::vector<double>& curve) {
    for (size_t i = 0; i < curve.size(); ++i)
      if (curve[i] < 1e-6) return int64_t(i) + 1;
    return int64_t(-1);
  };
  const int64_t sn = first_below(adan), sm = first_below(adam);

  const bool ok = worst <= 1e-9 && sn > 0 && sm > 0 && sn <= sm;
  return {ok ? Status::Pass : Status::Fail,
          "first-step deviation " + fmt("%.2e", worst) + " (tol 1e-9); quadratic loss <1e-6 after " +
              std::to_string(sn) + " adan steps vs " + std::to_string(sm) + " adam steps"};
}

// --- criterion 8: the network trains ------------------------------------------

Outcome criterion8() {
  RunConfig rc = RunConfig::recipe("lkdn-tiny");
  std::ostringstream sink;
  const TrainResult r = train_loop(rc, "", sink);

  const bool loss_ok = r.final_loss < 0.5 * r.initial_loss;
  const bool psnr_ok = r.val_psnr > r.val_bicubic_psnr;
  return {loss_ok && psnr_ok ? Status::Pass : Status::Fail,
          std::to_string(r.steps) + " steps: L1 " + fmt("%.4f", r.initial_loss) + " -> " +
              fmt("%.4f", r.final_loss) + " (" + fmt("%.1f%%", r.final_loss / r.initial_loss * 100.0) +
              ", need <50%); val PSNR " + fmt("%.2f", r.val_psnr) + " vs bicubic " +
              fmt("%.2f", r.val_bicubic_psnr) + " (" + fmt("%+.2f", r.val_psnr - r.val_bicubic_psnr) +
              " dB)"};
}

// --- criterion 9: bitwise resumability ----------------------------------------

Outcome criterion9() {
  std::ostringstream sink;
  for (const char* optimizer : {"adam", "adan"}) {
    TempDir full_dir(std::string("full-") + optimizer);
    TempDir split_dir(std::string("split-") + optimizer);

    RunConfig rc = RunConfig::recipe("lkdn-tiny");
    rc.synth_train_images = 4;
    rc.synth_val_images = 0;
    rc.synth_size = 48;
    rc.schedule = Schedule::constant(5e-3, 200);
    rc.stages = {TrainStage{2, 16}};
    rc.optimizer = optimizer;
    rc.checkpoint_every = 100;
    rc.eval_every = 1000;
    rc.log_every = 1000;
    rc.seed = 11;

    RunConfig full = rc;
    full.out_dir = full_dir.str();
    train_loop(full, "", sink);

    RunConfig split = rc;
    split.out_dir = split_dir.str();
    split.max_steps = 100;
    train_loop(split, "", sink);
    split.max_steps = -1;
    train_loop(split, split_dir.file("step_100.ckpt"), sink);

    const std::string a = read_bytes(full_dir.file("step_200.ckpt"));
    const std::string b = read_bytes(split_dir.file("step_200.ckpt"));
    if (a.empty() || a != b)
      return {Status::Fail, std::string(optimizer) +
                                ": resumed step_200 checkpoint differs from the uninterrupted run"};
  }
  return {Status::Pass,
          "interrupted-at-100 and uninterrupted 200-step checkpoints are byte-identical "
          "(params, EMA and optimizer state; adam and adan)"};
}

}  // namespace

int main() {
  struct Entry {
    int n;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };

  int failed = 0, skipped = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {Status::Fail, std::string("exception: ") + ex.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("criterion %d %s: %s (%.1fs)\n", e.n, label, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.status == Status::Fail;
    skipped += o.status == Status::Skip;
  }

  std::printf("acceptance: %d passed, %d failed, %d skipped\n",
              int(std::size(entries)) - failed - skipped, failed, skipped);
  return failed == 0 ? 0 : 1;
}
