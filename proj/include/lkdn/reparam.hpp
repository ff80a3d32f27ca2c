#pragma once

#include <type_traits>
#include <utility>

#include "lkdn/model.hpp"

namespace lkdn {

// Absorbs the identity skip of F1 = pw(x) + x: W' = W + I. Bias unchanged.
template <typename T>
TensorT<T> fuse_pointwise_identity(const TensorT<T>& w) {
  if (w.shape[2] != 1 || w.shape[3] != 1)
    throw ConfigError("fuse_pointwise_identity: kernel must be 1x1, got " + w.shape_str());
  if (w.shape[0] != w.shape[1])
    throw ConfigError("fuse_pointwise_identity: channel map " + w.shape_str() +
                      " is not square, identity cannot be absorbed");
  TensorT<T> out = w;
  for (int i = 0; i < w.shape[0]; ++i) out.at(i, i, 0, 0) += T(1);
  return out;
}

// Collapses dw3(x) + dw1(x) + x into one 3x3 depthwise conv: per channel the
// 1x1 kernel and the identity tap land on the center; biases sum.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> fuse_depthwise_branches(
    const TensorT<T>& k3, const TensorT<T>& k1, std::type_identity_t<const TensorT<T>*> b3,
    std::type_identity_t<const TensorT<T>*> b1) {
  if (k3.shape[1] != 1 || k3.shape[2] != 3 || k3.shape[3] != 3)
    throw ConfigError("fuse_depthwise_branches: expected depthwise 3x3 weight, got " +
                      k3.shape_str());
  if (k1.shape[0] != k3.shape[0] || k1.shape[1] != 1 || k1.shape[2] != 1 || k1.shape[3] != 1)
    throw ConfigError("fuse_depthwise_branches: expected depthwise 1x1 weight for " +
                      std::to_string(k3.shape[0]) + " channels, got " + k1.shape_str());
  const int c = k3.shape[0];
  TensorT<T> kw = k3;
  for (int i = 0; i < c; ++i) kw.at(i, 0, 1, 1) += k1.at(i, 0, 0, 0) + T(1);
  TensorT<T> bias(1, c, 1, 1);
  for (int i = 0; i < c; ++i)
    bias.data[i] = (b3 ? b3->data[i] : T(0)) + (b1 ? b1->data[i] : T(0));
  return {std::move(kw), std::move(bias)};
}

struct FusionLayer {
  std::string name;
  double max_deviation = 0.0;
  int64_t params_before = 0;
  int64_t params_after = 0;
};

struct FusionReport {
  std::vector<FusionLayer> layers;
  double overall_max_deviation = 0.0;
  int64_t params_before = 0;
  int64_t params_after = 0;
  uint64_t probe_seed = 0;
  int probe_images = 0;

  bool empty() const { return layers.empty(); }
  std::string to_text() const;
};

// Replaces every multi-branch refinement (and the up-sampler branch pair, if
// present) by its single-conv equivalent. Models with nothing to fuse pass
// through unchanged with an empty report; an already-fused model is a no-op.
std::pair<Model, FusionReport> fuse_model(const Model& m);

}  // namespace lkdn
