#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lkdn/ctx.hpp"

namespace lkdn {

enum class LossKind { L1, L2 };

inline const char* loss_name(LossKind k) { return k == LossKind::L1 ? "l1" : "l2"; }
inline LossKind loss_from_name(const std::string& s) {
  if (s == "l1") return LossKind::L1;
  if (s == "l2") return LossKind::L2;
  throw ConfigError("unknown loss kind: " + s + " (expected l1|l2)");
}

namespace detail {

template <typename T>
void check_grads(const ParamStoreT<T>& params, const GradMapT<T>& grads) {
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw UsageError("missing gradient for parameter: " + name);
    if (!it->second.same_shape(p))
      throw ShapeError("gradient shape " + it->second.shape_str() + " mismatches parameter " +
                       name + " " + p.shape_str());
    for (const auto& v : it->second.data)
      if (!std::isfinite(double(v)))
        throw NumericError("non-finite gradient for parameter: " + name + "; step aborted");
  }
}

}  // namespace detail

// Moments track gradient, gradient difference, and the squared combination.
// The recursion weights the *new* term by beta (m <- (1-b1)m + b1 g), with
// bias corrections 1-(1-b)^k to match. Decoupled weight decay.
template <typename T>
struct AdanT {
  double lr = 5e-3;
  double beta1 = 0.98, beta2 = 0.92, beta3 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int64_t step_count = 0;

  struct State {
    TensorT<T> m, v, n, gprev;
  };
  std::map<std::string, State> state;

  void step(ParamStoreT<T>& params, const GradMapT<T>& grads) {
    detail::check_grads(params, grads);
    ++step_count;
    const double k = double(step_count);
    const double c1 = 1.0 - std::pow(1.0 - beta1, k);
    const double c2 = 1.0 - std::pow(1.0 - beta2, k);
    const double c3 = 1.0 - std::pow(1.0 - beta3, k);
    const double decay = 1.0 / (1.0 + lr * weight_decay);
    for (auto& [name, p] : params) {
      const auto& g = grads.at(name);
      State& s = state[name];
      if (s.m.numel() == 0) {
        auto zeros = [&] { return TensorT<T>::zeros(p.shape[0], p.shape[1], p.shape[2], p.shape[3]); };
        s.m = zeros();
        s.v = zeros();
        s.n = zeros();
        s.gprev = zeros();
      }
      for (size_t i = 0; i < p.data.size(); ++i) {
        const double gi = double(g.data[i]);
        const double d = step_count == 1 ? 0.0 : gi - double(s.gprev.data[i]);
        const double m = (1.0 - beta1) * double(s.m.data[i]) + beta1 * gi;
        const double v = (1.0 - beta2) * double(s.v.data[i]) + beta2 * d;
        const double comb = gi + (1.0 - beta2) * d;
        const double n = (1.0 - beta3) * double(s.n.data[i]) + beta3 * comb * comb;
        s.m.data[i] = T(m);
        s.v.data[i] = T(v);
        s.n.data[i] = T(n);
        s.gprev.data[i] = g.data[i];
        const double update = (m / c1 + (1.0 - beta2) * (v / c2)) / (std::sqrt(n / c3) + eps);
        p.data[i] = T(decay * (double(p.data[i]) - lr * update));
      }
    }
  }
};

// Classical bias-corrected two-moment update.
template <typename T>
struct AdamT {
  double lr = 5e-3;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;

  struct State {
    TensorT<T> m, v;
  };
  std::map<std::string, State> state;

  void step(ParamStoreT<T>& params, const GradMapT<T>& grads) {
    detail::check_grads(params, grads);
    ++step_count;
    const double k = double(step_count);
    const double c1 = 1.0 - std::pow(beta1, k);
    const double c2 = 1.0 - std::pow(beta2, k);
    for (auto& [name, p] : params) {
      const auto& g = grads.at(name);
      State& s = state[name];
      if (s.m.numel() == 0) {
        s.m = TensorT<T>::zeros(p.shape[0], p.shape[1], p.shape[2], p.shape[3]);
        s.v = s.m;
      }
      for (size_t i = 0; i < p.data.size(); ++i) {
        const double gi = double(g.data[i]);
        const double m = beta1 * double(s.m.data[i]) + (1.0 - beta1) * gi;
        const double v = beta2 * double(s.v.data[i]) + (1.0 - beta2) * gi * gi;
        s.m.data[i] = T(m);
        s.v.data[i] = T(v);
        p.data[i] = T(double(p.data[i]) - lr * (m / c1) / (std::sqrt(v / c2) + eps));
      }
    }
  }
};

// Shadow weights for evaluation: shadow <- decay*shadow + (1-decay)*param.
template <typename T>
struct EmaT {
  double decay = 0.999;
  ParamStoreT<T> shadow;

  bool initialized() const { return shadow.size() > 0; }

  void init(const ParamStoreT<T>& params) { shadow = params; }

  void update(const ParamStoreT<T>& params) {
    for (auto& [name, s] : shadow) {
      const auto& p = params.get(name);
      for (size_t i = 0; i < s.data.size(); ++i)
        s.data[i] = T(decay * double(s.data[i]) + (1.0 - decay) * double(p.data[i]));
    }
  }
};

struct LrStage {
  int64_t steps = 0;
  double lr = 0.0;
  LossKind loss = LossKind::L1;
};

struct SchedulePoint {
  double lr;
  LossKind loss;
};

struct Schedule {
  std::vector<LrStage> stages;

  int64_t total_steps() const {
    int64_t t = 0;
    for (const auto& s : stages) t += s.steps;
    return t;
  }

  static Schedule constant(double lr, int64_t steps, LossKind loss = LossKind::L1) {
    return Schedule{{LrStage{steps, lr, loss}}};
  }
  static Schedule preset_lkdn() { return constant(5e-3, 1000000, LossKind::L1); }
  static Schedule preset_lkdn_s() {
    return Schedule{{LrStage{950000, 5e-3, LossKind::L1}, LrStage{50000, 2e-5, LossKind::L2}}};
  }

  // "950000:5e-3:l1,50000:2e-5:l2"
  static Schedule parse(const std::string& text);
};

// nullopt once the schedule is exhausted.
inline std::optional<SchedulePoint> schedule_at(const Schedule& sched, int64_t step) {
  if (step < 0) throw UsageError("schedule_at: negative step");
  int64_t base = 0;
  for (const auto& s : sched.stages) {
    if (step < base + s.steps) return SchedulePoint{s.lr, s.loss};
    base += s.steps;
  }
  return std::nullopt;
}

inline Schedule Schedule::parse(const std::string& text) {
  Schedule out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(pos, end - pos);
    const size_t a = item.find(':');
    const size_t b = a == std::string::npos ? std::string::npos : item.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw ConfigError("schedule item '" + item + "' must be steps:lr:loss");
    try {
      out.stages.push_back(LrStage{std::stoll(item.substr(0, a)),
                                   std::stod(item.substr(a + 1, b - a - 1)),
                                   loss_from_name(item.substr(b + 1))});
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("cannot parse schedule item '" + item + "'");
    }
    pos = end + 1;
  }
  if (out.stages.empty()) throw ConfigError("empty schedule");
  return out;
}

// f(theta) = theta^2 from theta0, one scalar parameter; returns the loss after
// each update. Shared by the optimizer benchmark and its acceptance check.
template <template <typename> class Opt>
std::vector<double> quadratic_curve(double theta0, double lr, int64_t steps) {
  ParamStoreT<double> params;
  params.add("theta", TensorT<double>::scalar(theta0));
  Opt<double> opt;
  opt.lr = lr;
  std::vector<double> losses;
  losses.reserve(size_t(steps));
  for (int64_t k = 0; k < steps; ++k) {
    const double theta = params.get("theta").data[0];
    GradMapT<double> grads;
    grads["theta"] = TensorT<double>::scalar(2.0 * theta);
    opt.step(params, grads);
    const double t = params.get("theta").data[0];
    losses.push_back(t * t);
  }
  return losses;
}

}  // namespace lkdn
