#include "lkdn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lkdn/metrics.hpp"
#include "lkdn/resize.hpp"

namespace fs = std::filesystem;

namespace lkdn {

namespace {

int64_t to_i64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int64_t RunConfig::total_steps() const {
  const int64_t t = schedule.total_steps();
  return max_steps >= 0 ? std::min(max_steps, t) : t;
}

TrainStage RunConfig::stage_at(int64_t step) const {
  if (stages.size() == 1) return stages[0];
  int64_t base = 0;
  for (size_t i = 0; i < schedule.stages.size(); ++i) {
    base += schedule.stages[i].steps;
    if (step < base) return stages[i];
  }
  return stages.back();
}

void RunConfig::validate() const {
  model.validate();
  if (schedule.stages.empty() || schedule.total_steps() <= 0)
    throw ConfigError("schedule must contain at least one stage with steps > 0");
  if (stages.empty() || (stages.size() != 1 && stages.size() != schedule.stages.size()))
    throw ConfigError("need one train stage, or one per schedule stage");
  for (const auto& s : stages)
    if (s.batch_size <= 0 || s.lr_patch <= 0)
      throw ConfigError("batch size and patch size must be positive");
  if (optimizer != "adan" && optimizer != "adam")
    throw ConfigError("optimizer must be adan or adam, got " + optimizer);
  if (ema_decay < 0.0 || ema_decay >= 1.0) throw ConfigError("ema_decay must be in [0,1)");
  if (checkpoint_every <= 0 || eval_every <= 0 || log_every <= 0)
    throw ConfigError("cadence values must be positive");
  if (train_dir.empty()) {
    if (synth_train_images <= 0) throw ConfigError("synthetic corpus needs synth_train_images > 0");
    for (const auto& s : stages)
      if (synth_size < s.lr_patch * model.scale)
        throw ConfigError("synth_size too small for the configured patch size");
  }
  if (val_dir.empty() && synth_val_images < 0) throw ConfigError("synth_val_images must be >= 0");
}

RunConfig RunConfig::recipe(const std::string& name) {
  RunConfig rc;
  if (name == "lkdn") {
    rc.model = LKDNConfig::preset("lkdn");
    rc.schedule = Schedule::preset_lkdn();
    rc.stages = {TrainStage{64, 48}};
    rc.optimizer = "adan";
  } else if (name == "lkdn-s") {
    rc.model = LKDNConfig::preset("lkdn-s");
    rc.schedule = Schedule::preset_lkdn_s();
    rc.stages = {TrainStage{128, 64}, TrainStage{64, 120}};
    rc.optimizer = "adan";
  } else if (name == "lkdn-tiny") {
    rc.model = LKDNConfig::preset("lkdn-tiny");
    rc.schedule = Schedule{{LrStage{1600, 5e-3, LossKind::L1}, LrStage{400, 5e-4, LossKind::L1}}};
    rc.stages = {TrainStage{8, 24}};
    rc.optimizer = "adam";
    rc.ema_decay = 0.99;
    rc.checkpoint_every = 1000;
    rc.eval_every = 500;
  } else {
    throw ConfigError("unknown recipe: " + name + " (expected lkdn|lkdn-s|lkdn-tiny)");
  }
  return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
  auto kv = read_kv_file(path);
  RunConfig rc;
  if (auto it = kv.find("recipe"); it != kv.end()) {
    rc = recipe(it->second);
    kv.erase(it);
  }
  rc.model = config_from_kv(kv, rc.model);

  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("train_dir"); !v.empty()) rc.train_dir = v;
  if (auto v = take("val_dir"); !v.empty()) rc.val_dir = v;
  if (auto v = take("synth_train_images"); !v.empty())
    rc.synth_train_images = int(to_i64("synth_train_images", v));
  if (auto v = take("synth_val_images"); !v.empty())
    rc.synth_val_images = int(to_i64("synth_val_images", v));
  if (auto v = take("synth_size"); !v.empty()) rc.synth_size = int(to_i64("synth_size", v));
  if (auto v = take("schedule"); !v.empty()) rc.schedule = Schedule::parse(v);
  if (auto v = take("batch_size"); !v.empty())
    for (auto& s : rc.stages) s.batch_size = int(to_i64("batch_size", v));
  if (auto v = take("lr_patch"); !v.empty())
    for (auto& s : rc.stages) s.lr_patch = int(to_i64("lr_patch", v));
  if (auto v = take("optimizer"); !v.empty()) rc.optimizer = v;
  if (auto v = take("ema_decay"); !v.empty()) rc.ema_decay = to_f64("ema_decay", v);
  if (auto v = take("seed"); !v.empty()) rc.seed = uint64_t(to_i64("seed", v));
  if (auto v = take("checkpoint_every"); !v.empty())
    rc.checkpoint_every = to_i64("checkpoint_every", v);
  if (auto v = take("eval_every"); !v.empty()) rc.eval_every = to_i64("eval_every", v);
  if (auto v = take("log_every"); !v.empty()) rc.log_every = to_i64("log_every", v);
  if (auto v = take("max_steps"); !v.empty()) rc.max_steps = to_i64("max_steps", v);
  if (auto v = take("out_dir"); !v.empty()) rc.out_dir = v;
  if (!kv.empty()) throw ConfigError(path + ": unknown config key '" + kv.begin()->first + "'");

  // When a single-stage override meets a multi-stage recipe, the schedule
  // stays authoritative; stage list already matches it or has size 1.
  rc.validate();
  return rc;
}

namespace {

struct Optimizer {
  std::string kind;
  AdanT<float> adan;
  AdamT<float> adam;

  explicit Optimizer(const std::string& k) : kind(k) {}

  void set_lr(double lr) {
    adan.lr = lr;
    adam.lr = lr;
  }
  void step(ParamStore& p, const GradMap& g) {
    if (kind == "adan")
      adan.step(p, g);
    else
      adam.step(p, g);
  }
  int64_t step_count() const { return kind == "adan" ? adan.step_count : adam.step_count; }
  void set_step_count(int64_t s) {
    adan.step_count = s;
    adam.step_count = s;
  }

  ParamStore state_store(const ParamStore& params) const {
    ParamStore out;
    for (const auto& [name, _] : params) {
      if (kind == "adan") {
        auto it = adan.state.find(name);
        if (it == adan.state.end()) continue;
        out.add("m." + name, it->second.m);
        out.add("v." + name, it->second.v);
        out.add("n." + name, it->second.n);
        out.add("gprev." + name, it->second.gprev);
      } else {
        auto it = adam.state.find(name);
        if (it == adam.state.end()) continue;
        out.add("m." + name, it->second.m);
        out.add("v." + name, it->second.v);
      }
    }
    return out;
  }

  void restore(const ParamStore& st, const ParamStore& params) {
    auto want = [&](const std::string& n) -> const Tensor& {
      if (!st.has(n)) throw ConfigError("checkpoint is missing optimizer state tensor " + n);
      return st.get(n);
    };
    for (const auto& [name, _] : params) {
      if (kind == "adan")
        adan.state[name] = AdanT<float>::State{want("m." + name), want("v." + name),
                                               want("n." + name), want("gprev." + name)};
      else
        adam.state[name] = AdamT<float>::State{want("m." + name), want("v." + name)};
    }
  }
};

struct ValItem {
  Image hr, lr;
  double bicubic_psnr = 0.0;
};

std::vector<Image> load_hr_images(const std::string& dir, int scale) {
  std::vector<Image> out;
  for (const auto& e : list_dataset(dir, "", scale)) out.push_back(load_png(e.hr_path));
  return out;
}

std::vector<ValItem> make_val_set(const std::vector<Image>& images, int scale) {
  std::vector<ValItem> out;
  for (const auto& img : images) {
    ValItem v;
    v.hr = modcrop(img, scale);
    v.lr = bicubic_resize(v.hr, v.hr.h / scale, v.hr.w / scale);
    const Image up = bicubic_resize(v.lr, v.hr.h, v.hr.w);
    v.bicubic_psnr = psnr(up, v.hr, scale);
    out.push_back(std::move(v));
  }
  return out;
}

void check_layout(const LKDNConfig& cfg, const ParamStore& params, const std::string& what) {
  const auto defs = layer_walk(cfg);
  if (defs.size() != params.size())
    throw ConfigError(what + ": expected " + std::to_string(defs.size()) + " tensors, found " +
                      std::to_string(params.size()));
  for (const auto& d : defs) {
    if (!params.has(d.name)) throw ConfigError(what + ": missing tensor " + d.name);
    if (params.get(d.name).shape != d.shape)
      throw ConfigError(what + ": tensor " + d.name + " has shape " +
                        params.get(d.name).shape_str());
  }
}

}  // namespace

Image sr_image(const LKDNConfig& cfg, const ParamStore& params, const Image& lr) {
  DirectEval<float> cx;
  DirectParams<float> p{params};
  return to_image(lkdn_forward(cx, p, cfg, to_tensor(lr)));
}

TrainResult train_loop(const RunConfig& rc, const std::string& resume_path, std::ostream& log) {
  rc.validate();
  const LKDNConfig& mc = rc.model;
  if (mc.fused) throw ConfigError("cannot train a fused model; fuse after training");
  const int scale = mc.scale;

  std::ofstream log_file;
  if (!rc.out_dir.empty()) {
    fs::create_directories(rc.out_dir);
    log_file.open(fs::path(rc.out_dir) / "train.log", std::ios::app);
    if (!log_file) throw IoError("cannot open training log in " + rc.out_dir);
  }
  auto logln = [&](const std::string& s) {
    log << s << "\n";
    log.flush();
    if (log_file.is_open()) log_file << s << "\n";
  };

  const std::vector<Image> train_images =
      rc.train_dir.empty()
          ? synth_corpus(derive_seed(rc.seed, fnv1a64("train-corpus")), rc.synth_train_images,
                         rc.synth_size)
          : load_hr_images(rc.train_dir, scale);
  const std::vector<ValItem> val = make_val_set(
      rc.val_dir.empty()
          ? synth_corpus(derive_seed(rc.seed, fnv1a64("val-corpus")), rc.synth_val_images,
                         rc.synth_size)
          : load_hr_images(rc.val_dir, scale),
      scale);

  Model model = Model::init(mc, rc.seed);
  Optimizer opt(rc.optimizer);
  EmaT<float> ema;
  ema.decay = rc.ema_decay;
  int64_t start = 0;

  if (!resume_path.empty()) {
    Checkpoint ck = Checkpoint::load(resume_path);
    if (config_to_kv(ck.cfg) != config_to_kv(mc))
      throw ConfigError("resume checkpoint model config disagrees with the run config");
    if (ck.optimizer != rc.optimizer)
      throw ConfigError("resume checkpoint used optimizer " + ck.optimizer + ", run wants " +
                        rc.optimizer);
    check_layout(mc, ck.params, resume_path);
    model.params = ck.params;
    if (ck.ema.size() > 0)
      ema.shadow = ck.ema;
    else
      ema.init(model.params);
    if (ck.step > 0) opt.restore(ck.opt_state, model.params);
    opt.set_step_count(ck.step);
    start = ck.step;
  } else {
    ema.init(model.params);
  }

  const int64_t total = rc.total_steps();
  if (start > total)
    throw ConfigError("checkpoint step " + std::to_string(start) + " already beyond schedule");

  TrainResult result;
  std::string last_ckpt;

  auto write_ckpt = [&](int64_t completed) {
    if (rc.out_dir.empty()) return;
    Checkpoint ck;
    ck.cfg = mc;
    ck.optimizer = rc.optimizer;
    ck.step = completed;
    ck.params = model.params;
    ck.ema = ema.shadow;
    ck.opt_state = opt.state_store(model.params);
    const std::string path =
        (fs::path(rc.out_dir) / ("step_" + std::to_string(completed) + ".ckpt")).string();
    ck.save(path);
    fs::copy_file(path, fs::path(rc.out_dir) / "latest.ckpt", fs::copy_options::overwrite_existing);
    last_ckpt = path;
    logln("step " + std::to_string(completed) + "/" + std::to_string(total) + " checkpoint " +
          path);
  };

  auto run_val = [&]() {
    if (val.empty()) return;
    double sp = 0.0, sb = 0.0;
    for (const auto& v : val) {
      const Image sr = sr_image(mc, ema.shadow, v.lr);
      sp += psnr(sr, v.hr, scale);
      sb += v.bicubic_psnr;
    }
    result.val_psnr = sp / double(val.size());
    result.val_bicubic_psnr = sb / double(val.size());
  };

  const auto t0 = std::chrono::steady_clock::now();
  const uint64_t step_stream = derive_seed(rc.seed, fnv1a64("step"));

  for (int64_t step = start; step < total; ++step) {
    const auto point = schedule_at(rc.schedule, step);
    if (!point) break;
    const TrainStage st = rc.stage_at(step);
    const int lp = st.lr_patch, hp = st.lr_patch * scale;
    Rng rng(derive_seed(step_stream, uint64_t(step)));

    Tensor lrb(st.batch_size, 3, lp, lp);
    Tensor hrb(st.batch_size, 3, hp, hp);
    for (int b = 0; b < st.batch_size; ++b) {
      const int idx = rng.uniform_int(0, int(train_images.size()));
      PatchPair pair = sample_patch_pair(train_images[size_t(idx)], scale, lp, rng);
      pair = augment(pair, random_augment(rng));
      std::memcpy(&lrb.at(b, 0, 0, 0), pair.lr.data.data(), pair.lr.data.size() * sizeof(float));
      std::memcpy(&hrb.at(b, 0, 0, 0), pair.hr.data.data(), pair.hr.data.size() * sizeof(float));
    }

    Tape<float> tape;
    TapeEval<float> cx{tape};
    TapeParams<float> tp(tape, model.params);
    const NodeId pred = lkdn_forward(cx, tp, mc, tape.leaf(std::move(lrb), false));
    const NodeId target = tape.leaf(std::move(hrb), false);
    const NodeId loss =
        point->loss == LossKind::L1 ? tape.l1(pred, target) : tape.l2(pred, target);
    const double loss_val = double(tape.value(loss).data[0]);
    if (!std::isfinite(loss_val))
      throw NumericError("training loss is not finite at step " + std::to_string(step) +
                         (last_ckpt.empty() ? "" : "; last good checkpoint: " + last_ckpt));
    const GradMap grads = tp.grads(tape.backward(loss));

    opt.set_lr(point->lr);
    opt.step(model.params, grads);
    ema.update(model.params);
    result.losses.push_back(loss_val);

    const int64_t completed = step + 1;
    if (completed % rc.log_every == 0 || completed == total) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      logln("step " + std::to_string(completed) + "/" + std::to_string(total) + " loss " +
            fmt("%.6f", loss_val) + " lr " + fmt("%.3e", point->lr) + " elapsed " +
            fmt("%.1f", secs) + "s");
    }
    if (!val.empty() && (completed % rc.eval_every == 0 || completed == total)) {
      run_val();
      logln("step " + std::to_string(completed) + "/" + std::to_string(total) + " val_psnr " +
            fmt("%.3f", result.val_psnr) + " val_bicubic " + fmt("%.3f", result.val_bicubic_psnr) +
            " (ema weights)");
    }
    if (completed % rc.checkpoint_every == 0 || completed == total) write_ckpt(completed);
  }

  result.steps = int64_t(result.losses.size());
  result.last_checkpoint = last_ckpt;
  if (!result.losses.empty()) {
    const size_t k = std::min<size_t>(50, result.losses.size());
    double a = 0.0, b = 0.0;
    for (size_t i = 0; i < k; ++i) {
      a += result.losses[i];
      b += result.losses[result.losses.size() - 1 - i];
    }
    result.initial_loss = a / double(k);
    result.final_loss = b / double(k);
  }
  return result;
}

std::string EvalTable::to_csv() const {
  std::ostringstream ss;
  ss << "name,psnr,ssim\n";
  for (const auto& r : rows)
    ss << r.name << "," << fmt("%.4f", r.psnr) << "," << fmt("%.5f", r.ssim) << "\n";
  ss << "mean," << fmt("%.4f", mean_psnr) << "," << fmt("%.5f", mean_ssim) << "\n";
  return ss.str();
}

std::string EvalTable::to_text() const {
  size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::ostringstream ss;
  for (const auto& r : rows)
    ss << r.name << std::string(w - r.name.size() + 2, ' ') << fmt("%7.4f", r.psnr) << " / "
       << fmt("%.5f", r.ssim) << "\n";
  ss << "mean" << std::string(w - 4 + 2, ' ') << fmt("%7.4f", mean_psnr) << " / "
     << fmt("%.5f", mean_ssim) << "\n";
  return ss.str();
}

EvalTable evaluate_dir(const Checkpoint* ck, const std::string& hr_dir, const std::string& lr_dir,
                       int scale) {
  if (ck && ck->cfg.scale != scale)
    throw ConfigError("checkpoint scale " + std::to_string(ck->cfg.scale) +
                      " does not match requested scale " + std::to_string(scale));
  EvalTable table;
  for (const auto& e : list_dataset(hr_dir, lr_dir, scale)) {
    const Image hr = modcrop(load_png(e.hr_path), scale);
    Image lr = e.lr_path.empty() ? bicubic_resize(hr, hr.h / scale, hr.w / scale)
                                 : load_png(e.lr_path);
    if (lr.h * scale != hr.h || lr.w * scale != hr.w)
      throw ShapeError(e.name + ": LR " + std::to_string(lr.h) + "x" + std::to_string(lr.w) +
                       " does not match mod-cropped HR at scale " + std::to_string(scale));
    const Image sr =
        ck ? sr_image(ck->cfg, ck->eval_params(), lr) : bicubic_resize(lr, hr.h, hr.w);
    table.rows.push_back(EvalRow{e.name, psnr(sr, hr, scale), ssim(sr, hr, scale)});
  }
  for (const auto& r : table.rows) {
    table.mean_psnr += r.psnr;
    table.mean_ssim += r.ssim;
  }
  table.mean_psnr /= double(table.rows.size());
  table.mean_ssim /= double(table.rows.size());
  return table;
}

std::string optbench_csv(const std::string& objective, int64_t steps, std::ostream& log) {
  if (steps <= 0) throw ConfigError("optbench: steps must be positive");
  std::vector<double> adan_curve, adam_curve;
  if (objective == "quadratic") {
    adan_curve = quadratic_curve<AdanT>(1.0, 0.01, steps);
    adam_curve = quadratic_curve<AdamT>(1.0, 0.01, steps);
  } else if (objective == "tiny-sr") {
    RunConfig rc = RunConfig::recipe("lkdn-tiny");
    rc.max_steps = steps;
    rc.eval_every = steps;
    rc.out_dir.clear();
    for (const char* kind : {"adan", "adam"}) {
      rc.optimizer = kind;
      log << "optbench: training lkdn-tiny with " << kind << "\n";
      TrainResult r = train_loop(rc, "", log);
      (kind == std::string("adan") ? adan_curve : adam_curve) = std::move(r.losses);
    }
  } else {
    throw ConfigError("unknown objective: " + objective + " (expected quadratic|tiny-sr)");
  }
  std::ostringstream ss;
  ss << "step,adan,adam\n";
  for (size_t i = 0; i < adan_curve.size(); ++i)
    ss << (i + 1) << "," << fmt("%.12g", adan_curve[i]) << "," << fmt("%.12g", adam_curve[i])
       << "\n";
  return ss.str();
}

}  // namespace lkdn
