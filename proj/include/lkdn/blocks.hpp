#pragma once

#include <string>

#include "lkdn/ctx.hpp"

namespace lkdn {

enum class Variant { BSRB, BSB, RBSB };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::BSRB: return "bsrb";
    case Variant::BSB: return "bsb";
    case Variant::RBSB: return "rbsb";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "bsrb") return Variant::BSRB;
  if (s == "bsb") return Variant::BSB;
  if (s == "rbsb") return Variant::RBSB;
  throw ConfigError("unknown refinement variant: " + s + " (expected bsrb|bsb|rbsb)");
}

inline constexpr double kPixelNormEps = 1e-6;

// Network layers, written once against the evaluation-context interface.
// Parameters are addressed by name prefix; bias presence follows the store.
namespace blocks {

template <class Cx, class P>
typename Cx::Value conv1x1(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x) {
  const auto& w = p.get(pre + ".weight");
  const auto* b = p.maybe(pre + ".bias");
  ConvSpec s = pointwise_spec(cx.shape(x)[1], cx.shape(w)[0], b != nullptr);
  return cx.conv2d(x, w, b, s);
}

template <class Cx, class P>
typename Cx::Value conv_dw(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                           int k, int dilation = 1) {
  const auto& w = p.get(pre + ".weight");
  const auto* b = p.maybe(pre + ".bias");
  ConvSpec s = depthwise_spec(cx.shape(x)[1], k, dilation, b != nullptr);
  return cx.conv2d(x, w, b, s);
}

template <class Cx, class P>
typename Cx::Value conv_dense(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                              int k) {
  const auto& w = p.get(pre + ".weight");
  const auto* b = p.maybe(pre + ".bias");
  ConvSpec s = dense_spec(cx.shape(x)[1], cx.shape(w)[0], k, b != nullptr);
  return cx.conv2d(x, w, b, s);
}

// 1x1 pointwise then k x k depthwise.
template <class Cx, class P>
typename Cx::Value bsconv(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                          int k) {
  auto y = conv1x1(cx, p, pre + ".pw", x);
  return conv_dw(cx, p, pre + ".dw", y, k);
}

template <class Cx, class P>
typename Cx::Value bsb(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x) {
  return cx.gelu(bsconv(cx, p, pre, x, 3));
}

template <class Cx, class P>
typename Cx::Value bsrb(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x) {
  return cx.gelu(cx.add(bsconv(cx, p, pre, x, 3), x));
}

// Multi-branch form: F1 = pw(x) + x; F2 = dw3(F1) + dw1(F1) + F1.
// Fused form: F2 = dw3'(pw'(x)). GELU is applied by rbsb(), not here.
template <class Cx, class P>
typename Cx::Value rbsb_preact(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                               bool fused) {
  if (fused) {
    auto y = conv1x1(cx, p, pre + ".pw", x);
    return conv_dw(cx, p, pre + ".dw3", y, 3);
  }
  auto f1 = cx.add(conv1x1(cx, p, pre + ".pw", x), x);
  auto f2 = cx.add(cx.add(conv_dw(cx, p, pre + ".dw3", f1, 3), conv_dw(cx, p, pre + ".dw1", f1, 1)),
                   f1);
  return f2;
}

template <class Cx, class P>
typename Cx::Value rbsb(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                        bool fused) {
  return cx.gelu(rbsb_preact(cx, p, pre, x, fused));
}

template <class Cx, class P>
typename Cx::Value refinement(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                              Variant v, bool fused) {
  switch (v) {
    case Variant::BSB: return bsb(cx, p, pre, x);
    case Variant::BSRB: return bsrb(cx, p, pre, x);
    case Variant::RBSB: return rbsb(cx, p, pre, x, fused);
  }
  throw UsageError("refinement: bad variant");
}

// attention = dilated_dw5(dw5(pw(x))); output = attention ⊙ x.
// No activations and no biases anywhere in the attention branch.
template <class Cx, class P>
typename Cx::Value lka(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x) {
  auto a = conv1x1(cx, p, pre + ".pw", x);
  a = conv_dw(cx, p, pre + ".dw", a, 5, 1);
  a = conv_dw(cx, p, pre + ".dwd", a, 5, 3);
  return cx.mul(a, x);
}

// Distill -> concat+fuse -> attention -> transform+norm -> skip.
template <class Cx, class P>
typename Cx::Value lkdb(Cx& cx, P& p, const std::string& pre, const typename Cx::Value& x,
                        Variant v, bool fused) {
  using V = typename Cx::Value;
  V d1 = conv1x1(cx, p, pre + ".d1", x);
  V r1 = refinement(cx, p, pre + ".r1", x, v, fused);
  V d2 = conv1x1(cx, p, pre + ".d2", r1);
  V r2 = refinement(cx, p, pre + ".r2", r1, v, fused);
  V d3 = conv1x1(cx, p, pre + ".d3", r2);
  V r3 = refinement(cx, p, pre + ".r3", r2, v, fused);
  V d4 = bsconv(cx, p, pre + ".d4", r3, 3);
  V cat = cx.concat({std::move(d1), std::move(d2), std::move(d3), std::move(d4)});
  V f = conv1x1(cx, p, pre + ".fuse", cat);
  V e = lka(cx, p, pre + ".lka", f);
  V t = conv1x1(cx, p, pre + ".trans", e);
  V nrm = cx.pixel_norm(t, p.get(pre + ".norm.gamma"), p.get(pre + ".norm.beta"), kPixelNormEps);
  return cx.add(nrm, x);
}

}  // namespace blocks
}  // namespace lkdn
