#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lkdn/blocks.hpp"

namespace lkdn {

struct LKDNConfig {
  int scale = 4;
  int num_blocks = 8;
  int channels = 56;
  int attention_channels = 56;
  int input_replication = 4;
  Variant variant = Variant::BSB;
  bool upsampler_reparam = false;
  bool fused = false;

  void validate() const;
  int distilled_channels() const { return channels / 2; }

  // "lkdn", "lkdn-s", "lkdn-tiny"
  static LKDNConfig preset(const std::string& name);
};

struct ParamDef {
  enum Kind { ConvWeight, ConvBias, NormAffine };
  std::string name;
  std::array<int, 4> shape;
  Kind kind = ConvWeight;
  int fan_in = 0;           // (in_c/groups) * kh * kw of the owning conv
  double init_const = 0.0;  // NormAffine only
  size_t numel() const {
    return size_t(shape[0]) * shape[1] * shape[2] * shape[3];
  }
};

// The single source of truth for the network's trainable tensors: forward
// wiring, initialization, parameter/multiply-add accounting, checkpoints and
// fusion bookkeeping all derive from this walk.
std::vector<ParamDef> layer_walk(const LKDNConfig& cfg);

int64_t count_params(const LKDNConfig& cfg);

// Multiply-accumulates of one forward pass with a gt_h x gt_w ground-truth
// image, i.e. at LR input size gt/scale. Counts convolutions only.
int64_t count_multadds(const LKDNConfig& cfg, int gt_h = 720, int gt_w = 1280);

// r = 1 + sum (k-1)*dilation over chained stages.
int receptive_field(const std::vector<std::pair<int, int>>& stages);

// The attention branch: 1x1, then 5x5, then 5x5 with dilation 3 -> 17.
int attention_receptive_field(const LKDNConfig& cfg);

struct Model {
  LKDNConfig cfg;
  ParamStore params;

  static Model init(const LKDNConfig& cfg, uint64_t seed);

  // Builds a store shaped by the walk; `fill` provides each tensor.
  template <typename T, typename Fill>
  static ParamStoreT<T> build_store(const LKDNConfig& cfg, Fill&& fill) {
    ParamStoreT<T> store;
    for (const ParamDef& d : layer_walk(cfg)) {
      TensorT<T> t(d.shape[0], d.shape[1], d.shape[2], d.shape[3]);
      fill(d, t);
      store.add(d.name, std::move(t));
    }
    return store;
  }

  Tensor forward(const Tensor& lr) const;
};

// Full network, both evaluation contexts.
template <class Cx, class P>
typename Cx::Value lkdn_forward(Cx& cx, P& p, const LKDNConfig& cfg, typename Cx::Value x) {
  using V = typename Cx::Value;
  if (cx.shape(x)[1] != 3)
    throw ShapeError("forward: input must have 3 channels, got " +
                     std::to_string(cx.shape(x)[1]));

  V cur = x;
  if (cfg.input_replication > 1) {
    std::vector<V> copies(cfg.input_replication, x);
    cur = cx.concat(copies);
  }
  V f0 = blocks::bsconv(cx, p, "shallow", cur, 3);

  V f = f0;
  std::vector<V> outs;
  for (int i = 0; i < cfg.num_blocks; ++i) {
    f = blocks::lkdb(cx, p, "block" + std::to_string(i), f, cfg.variant, cfg.fused);
    outs.push_back(f);
  }
  V cat = outs.size() > 1 ? cx.concat(outs) : outs[0];
  V fused_feat = cx.gelu(blocks::conv1x1(cx, p, "fusion", cat));
  fused_feat = blocks::bsconv(cx, p, "smooth", fused_feat, 3);
  V body = cx.add(fused_feat, f0);

  V rec = blocks::conv_dense(cx, p, "recon", body, 3);
  if (cfg.upsampler_reparam && !cfg.fused)
    rec = cx.add(rec, blocks::conv1x1(cx, p, "recon.branch1x1", body));
  return cx.pixel_shuffle(rec, cfg.scale);
}

// Key-value config file support ("key value" lines, '#' comments).
std::map<std::string, std::string> read_kv_file(const std::string& path);

// Applies model keys from `kv` on top of `base`, erasing the ones it consumed.
LKDNConfig config_from_kv(std::map<std::string, std::string>& kv, const LKDNConfig& base = {});

std::map<std::string, std::string> config_to_kv(const LKDNConfig& cfg);

}  // namespace lkdn
