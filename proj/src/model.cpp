#include "lkdn/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lkdn {

void LKDNConfig::validate() const {
  if (scale != 2 && scale != 3 && scale != 4)
    throw ConfigError("scale must be 2, 3 or 4, got " + std::to_string(scale));
  if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
  if (channels < 2 || channels % 2 != 0)
    throw ConfigError("channels must be even and >= 2, got " + std::to_string(channels));
  if (attention_channels < 1) throw ConfigError("attention_channels must be >= 1");
  if (input_replication < 1) throw ConfigError("input_replication must be >= 1");
  if (fused && variant != Variant::RBSB && !upsampler_reparam)
    throw ConfigError("fused topology requires the rbsb variant or a re-parameterized upsampler");
}

LKDNConfig LKDNConfig::preset(const std::string& name) {
  LKDNConfig c;
  if (name == "lkdn") {
    c = LKDNConfig{4, 8, 56, 56, 4, Variant::BSB, false, false};
  } else if (name == "lkdn-s") {
    c = LKDNConfig{4, 5, 42, 42, 4, Variant::RBSB, true, false};
  } else if (name == "lkdn-tiny") {
    c = LKDNConfig{2, 2, 8, 8, 1, Variant::RBSB, false, false};
  } else {
    throw ConfigError("unknown preset: " + name + " (expected lkdn|lkdn-s|lkdn-tiny)");
  }
  return c;
}

std::vector<ParamDef> layer_walk(const LKDNConfig& cfg) {
  cfg.validate();
  std::vector<ParamDef> defs;

  auto conv = [&](const std::string& name, int out_c, int in_c, int k, int groups, bool bias) {
    const int fan_in = (in_c / groups) * k * k;
    defs.push_back({name + ".weight", {out_c, in_c / groups, k, k}, ParamDef::ConvWeight, fan_in,
                    0.0});
    if (bias)
      defs.push_back({name + ".bias", {1, out_c, 1, 1}, ParamDef::ConvBias, fan_in, 0.0});
  };
  auto bsconv = [&](const std::string& pre, int out_c, int in_c, int k) {
    conv(pre + ".pw", out_c, in_c, 1, 1, false);
    conv(pre + ".dw", out_c, out_c, k, out_c, false);
  };
  auto refinement = [&](const std::string& pre, int c) {
    switch (cfg.variant) {
      case Variant::BSB:
      case Variant::BSRB:
        bsconv(pre, c, c, 3);
        break;
      case Variant::RBSB:
        conv(pre + ".pw", c, c, 1, 1, true);
        conv(pre + ".dw3", c, c, 3, c, true);
        if (!cfg.fused) conv(pre + ".dw1", c, c, 1, c, true);
        break;
    }
  };

  const int c = cfg.channels, cd = cfg.distilled_channels(), a = cfg.attention_channels;

  bsconv("shallow", c, 3 * cfg.input_replication, 3);
  for (int i = 0; i < cfg.num_blocks; ++i) {
    const std::string b = "block" + std::to_string(i);
    conv(b + ".d1", cd, c, 1, 1, false);
    refinement(b + ".r1", c);
    conv(b + ".d2", cd, c, 1, 1, false);
    refinement(b + ".r2", c);
    conv(b + ".d3", cd, c, 1, 1, false);
    refinement(b + ".r3", c);
    bsconv(b + ".d4", cd, c, 3);
    conv(b + ".fuse", a, 4 * cd, 1, 1, false);
    conv(b + ".lka.pw", a, a, 1, 1, false);
    conv(b + ".lka.dw", a, a, 5, a, false);
    conv(b + ".lka.dwd", a, a, 5, a, false);
    conv(b + ".trans", c, a, 1, 1, false);
    defs.push_back({b + ".norm.gamma", {1, c, 1, 1}, ParamDef::NormAffine, 0, 1.0});
    defs.push_back({b + ".norm.beta", {1, c, 1, 1}, ParamDef::NormAffine, 0, 0.0});
  }
  conv("fusion", c, cfg.num_blocks * c, 1, 1, false);
  bsconv("smooth", c, c, 3);
  conv("recon", 3 * cfg.scale * cfg.scale, c, 3, 1, false);
  if (cfg.upsampler_reparam && !cfg.fused)
    conv("recon.branch1x1", 3 * cfg.scale * cfg.scale, c, 1, 1, false);

  return defs;
}

int64_t count_params(const LKDNConfig& cfg) {
  int64_t total = 0;
  for (const auto& d : layer_walk(cfg)) total += int64_t(d.numel());
  return total;
}

int64_t count_multadds(const LKDNConfig& cfg, int gt_h, int gt_w) {
  // Area-based convention: the count scales with the number of low-resolution
  // pixels, gt_area / scale^2, even when one ground-truth dimension is not a
  // multiple of the scale (1280 at scale 3).
  const int64_t area = int64_t(gt_h) * gt_w;
  const int64_t s2 = int64_t(cfg.scale) * cfg.scale;
  if (area % s2 != 0)
    throw ConfigError("ground-truth area " + std::to_string(gt_h) + "x" + std::to_string(gt_w) +
                      " is not divisible by scale^2 = " + std::to_string(s2));
  const int64_t lr_px = area / s2;
  int64_t per_px = 0;
  for (const auto& d : layer_walk(cfg))
    if (d.kind == ParamDef::ConvWeight) per_px += int64_t(d.numel());
  return per_px * lr_px;
}

int receptive_field(const std::vector<std::pair<int, int>>& stages) {
  int r = 1;
  for (const auto& [k, dil] : stages) r += (k - 1) * dil;
  return r;
}

int attention_receptive_field(const LKDNConfig&) {
  return receptive_field({{1, 1}, {5, 1}, {5, 3}});
}

Model Model::init(const LKDNConfig& cfg, uint64_t seed) {
  Model m;
  m.cfg = cfg;
  m.params = build_store<float>(cfg, [&](const ParamDef& d, Tensor& t) {
    if (d.kind == ParamDef::NormAffine) {
      std::fill(t.data.begin(), t.data.end(), float(d.init_const));
    } else {
      Rng rng(derive_seed(seed, fnv1a64(d.name)));
      const double bound = 1.0 / std::sqrt(double(d.fan_in));
      t.fill_uniform(rng, -bound, bound);
    }
  });
  return m;
}

Tensor Model::forward(const Tensor& lr) const {
  if (lr.h() < 17 || lr.w() < 17)
    std::fprintf(stderr,
                 "warning: input %dx%d is smaller than the 17x17 attention receptive field\n",
                 lr.h(), lr.w());
  DirectEval<float> cx;
  DirectParams<float> p{params};
  return lkdn_forward(cx, p, cfg, lr);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key, value, extra;
    if (!(ss >> key)) continue;
    if (!(ss >> value) || (ss >> extra))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key value', got '" + line + "'");
    if (kv.count(key))
      throw ConfigError(path + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw ConfigError("config key '" + key + "': expected 0/1/true/false, got '" + v + "'");
}

}  // namespace

LKDNConfig config_from_kv(std::map<std::string, std::string>& kv, const LKDNConfig& base) {
  LKDNConfig cfg = base;
  if (auto it = kv.find("preset"); it != kv.end()) {
    cfg = LKDNConfig::preset(it->second);
    kv.erase(it);
  }
  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("scale"); !v.empty()) cfg.scale = to_int("scale", v);
  if (auto v = take("num_blocks"); !v.empty()) cfg.num_blocks = to_int("num_blocks", v);
  if (auto v = take("channels"); !v.empty()) cfg.channels = to_int("channels", v);
  if (auto v = take("attention_channels"); !v.empty())
    cfg.attention_channels = to_int("attention_channels", v);
  if (auto v = take("input_replication"); !v.empty())
    cfg.input_replication = to_int("input_replication", v);
  if (auto v = take("refinement_variant"); !v.empty()) cfg.variant = variant_from_name(v);
  if (auto v = take("upsampler_reparam"); !v.empty())
    cfg.upsampler_reparam = to_bool("upsampler_reparam", v);
  if (auto v = take("fused"); !v.empty()) cfg.fused = to_bool("fused", v);
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> config_to_kv(const LKDNConfig& cfg) {
  return {
      {"scale", std::to_string(cfg.scale)},
      {"num_blocks", std::to_string(cfg.num_blocks)},
      {"channels", std::to_string(cfg.channels)},
      {"attention_channels", std::to_string(cfg.attention_channels)},
      {"input_replication", std::to_string(cfg.input_replication)},
      {"refinement_variant", variant_name(cfg.variant)},
      {"upsampler_reparam", cfg.upsampler_reparam ? "1" : "0"},
      {"fused", cfg.fused ? "1" : "0"},
  };
}

}  // namespace lkdn
