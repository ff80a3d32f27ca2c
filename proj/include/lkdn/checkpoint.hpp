#pragma once

#include <cstdint>
#include <string>

#include "lkdn/ctx.hpp"
#include "lkdn/model.hpp"

namespace lkdn {

// Text manifest (version, config, tensor index, payload checksum) followed by
// one raw little-endian f32 payload. Sections are name prefixes in the index:
// param.*, ema.*, opt.*. Round trip is bitwise exact.
struct Checkpoint {
  LKDNConfig cfg;
  std::string optimizer = "none";  // none|adan|adam
  int64_t step = 0;
  ParamStore params;
  ParamStore ema;        // empty unless EMA was tracked
  ParamStore opt_state;  // optimizer tensors, e.g. "m.block0.fuse.weight"

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  // EMA weights when present, raw parameters otherwise.
  const ParamStore& eval_params() const { return ema.size() > 0 ? ema : params; }
};

}  // namespace lkdn
