#include "lkdn/reparam.hpp"

#include <cstdio>
#include <sstream>

namespace lkdn {

namespace {

Tensor probe_batch(uint64_t seed, uint64_t stream, int n, int c, int hw) {
  Rng rng(derive_seed(seed, stream));
  Tensor t(n, c, hw, hw);
  t.fill_uniform(rng, -1.0, 1.0);
  return t;
}

int64_t named_numel(const ParamStore& s, const std::string& name) {
  return s.has(name) ? int64_t(s.get(name).numel()) : 0;
}

}  // namespace

std::string FusionReport::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %12s %12s %12s\n", "layer", "max|dev|", "params",
                "fused");
  os << line;
  for (const auto& l : layers) {
    std::snprintf(line, sizeof line, "%-18s %12.3e %12lld %12lld\n", l.name.c_str(),
                  l.max_deviation, (long long)l.params_before, (long long)l.params_after);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-18s %12.3e %12lld %12lld\n", "overall", overall_max_deviation,
                (long long)params_before, (long long)params_after);
  os << line;
  os << "probe: " << probe_images << " random images, seed " << probe_seed << "\n";
  return os.str();
}

std::pair<Model, FusionReport> fuse_model(const Model& m) {
  FusionReport report;
  report.probe_seed = 0;
  report.probe_images = 8;

  const bool fusable = m.cfg.variant == Variant::RBSB || m.cfg.upsampler_reparam;
  if (m.cfg.fused || !fusable) {
    Model out = m;
    report.params_before = report.params_after = m.params.scalar_count();
    return {std::move(out), std::move(report)};
  }

  Model out;
  out.cfg = m.cfg;
  out.cfg.fused = true;

  // Every fused-topology tensor name also exists in the train topology; copy
  // first, then overwrite the tensors fusion actually rewrites.
  out.params = Model::build_store<float>(out.cfg, [&](const ParamDef& d, Tensor& t) {
    t = m.params.get(d.name);
  });

  DirectEval<float> cx;
  DirectParams<float> before{m.params};
  DirectParams<float> after{out.params};

  if (m.cfg.variant == Variant::RBSB) {
    for (int i = 0; i < m.cfg.num_blocks; ++i) {
      for (int j = 1; j <= 3; ++j) {
        const std::string pre =
            "block" + std::to_string(i) + ".r" + std::to_string(j);
        out.params.get(pre + ".pw.weight") =
            fuse_pointwise_identity(m.params.get(pre + ".pw.weight"));
        auto [kw, kb] = fuse_depthwise_branches(
            m.params.get(pre + ".dw3.weight"), m.params.get(pre + ".dw1.weight"),
            m.params.has(pre + ".dw3.bias") ? &m.params.get(pre + ".dw3.bias") : nullptr,
            m.params.has(pre + ".dw1.bias") ? &m.params.get(pre + ".dw1.bias") : nullptr);
        out.params.get(pre + ".dw3.weight") = std::move(kw);
        out.params.get(pre + ".dw3.bias") = std::move(kb);

        FusionLayer layer;
        layer.name = pre;
        for (const char* stage : {".pw.weight", ".pw.bias", ".dw3.weight", ".dw3.bias",
                                  ".dw1.weight", ".dw1.bias"})
          layer.params_before += named_numel(m.params, pre + stage);
        for (const char* stage : {".pw.weight", ".pw.bias", ".dw3.weight", ".dw3.bias"})
          layer.params_after += named_numel(out.params, pre + stage);
        Tensor probe = probe_batch(report.probe_seed, fnv1a64(pre), report.probe_images,
                                   m.cfg.channels, 16);
        layer.max_deviation = max_abs_diff(blocks::rbsb(cx, before, pre, probe, false),
                                           blocks::rbsb(cx, after, pre, probe, true));
        report.layers.push_back(std::move(layer));
      }
    }
  }

  if (m.cfg.upsampler_reparam) {
    const Tensor& k3 = m.params.get("recon.weight");
    const Tensor& k1 = m.params.get("recon.branch1x1.weight");
    Tensor fusedw = k3;
    for (int oc = 0; oc < k3.shape[0]; ++oc)
      for (int ic = 0; ic < k3.shape[1]; ++ic) fusedw.at(oc, ic, 1, 1) += k1.at(oc, ic, 0, 0);
    out.params.get("recon.weight") = std::move(fusedw);

    FusionLayer layer;
    layer.name = "recon";
    layer.params_before =
        named_numel(m.params, "recon.weight") + named_numel(m.params, "recon.branch1x1.weight");
    layer.params_after = named_numel(out.params, "recon.weight");
    Tensor probe =
        probe_batch(report.probe_seed, fnv1a64("recon"), report.probe_images, m.cfg.channels, 16);
    Tensor two = add(blocks::conv_dense(cx, before, "recon", probe, 3),
                     blocks::conv1x1(cx, before, "recon.branch1x1", probe));
    layer.max_deviation = max_abs_diff(two, blocks::conv_dense(cx, after, "recon", probe, 3));
    report.layers.push_back(std::move(layer));
  }

  report.params_before = m.params.scalar_count();
  report.params_after = out.params.scalar_count();
  if (report.params_after >= report.params_before)
    throw NumericError("fusion did not reduce the parameter count");

  Tensor probe = probe_batch(report.probe_seed, fnv1a64("end-to-end"), report.probe_images, 3, 32);
  for (auto& v : probe.data) v = 0.5f * (v + 1.0f);  // inputs live in [0,1]
  DirectParams<float> pb{m.params}, pa{out.params};
  report.overall_max_deviation = max_abs_diff(lkdn_forward(cx, pb, m.cfg, probe),
                                              lkdn_forward(cx, pa, out.cfg, probe));

  return {std::move(out), std::move(report)};
}

}  // namespace lkdn
