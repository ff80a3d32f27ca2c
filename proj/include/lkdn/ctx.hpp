#pragma once

#include <map>
#include <unordered_map>
#include <vector>

#include "lkdn/tape.hpp"

namespace lkdn {

// Named trainable tensors with stable (insertion-order) iteration, so
// checkpoints and optimizer sweeps are reproducible byte for byte.
template <typename T>
class ParamStoreT {
 public:
  using Item = std::pair<std::string, TensorT<T>>;

  TensorT<T>& add(const std::string& name, TensorT<T> v) {
    if (index_.count(name)) throw UsageError("parameter already exists: " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(v));
    return items_.back().second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  TensorT<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return items_[it->second].second;
  }
  const TensorT<T>& get(const std::string& name) const {
    return const_cast<ParamStoreT*>(this)->get(name);
  }

  size_t size() const { return items_.size(); }
  int64_t scalar_count() const {
    int64_t s = 0;
    for (const auto& [_, t] : items_) s += int64_t(t.numel());
    return s;
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, size_t> index_;
};

using ParamStore = ParamStoreT<float>;

template <typename T>
using GradMapT = std::map<std::string, TensorT<T>>;
using GradMap = GradMapT<float>;

// The two evaluation contexts. Network code is templated over one of these;
// `Value` is a tensor when evaluating directly and a node handle on a tape.
template <typename T>
struct DirectEval {
  using Value = TensorT<T>;
  static constexpr bool taped = false;

  Value constant(TensorT<T> v) const { return v; }
  const std::array<int, 4>& shape(const Value& v) const { return v.shape; }

  Value conv2d(const Value& x, const Value& w, const Value* b, const ConvSpec& s) const {
    return lkdn::conv2d(x, w, b, s);
  }
  Value pixel_shuffle(const Value& x, int r) const { return lkdn::pixel_shuffle(x, r); }
  Value gelu(const Value& x) const { return lkdn::gelu(x); }
  Value concat(const std::vector<Value>& parts) const {
    std::vector<const TensorT<T>*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    return concat_channels(ptrs);
  }
  Value add(const Value& a, const Value& b) const { return lkdn::add(a, b); }
  Value mul(const Value& a, const Value& b) const { return lkdn::mul(a, b); }
  Value pixel_norm(const Value& x, const Value& g, const Value& bt, double eps) const {
    return lkdn::pixel_norm(x, g, bt, eps);
  }
  Value sum(const Value& x) const { return TensorT<T>::scalar(T(sum_all(x))); }
  Value l1(const Value& p, const Value& t) const { return TensorT<T>::scalar(T(l1_loss(p, t))); }
  Value l2(const Value& p, const Value& t) const { return TensorT<T>::scalar(T(l2_loss(p, t))); }
};

template <typename T>
struct TapeEval {
  Tape<T>& tape;
  using Value = NodeId;
  static constexpr bool taped = true;

  Value constant(TensorT<T> v) const { return tape.leaf(std::move(v), false); }
  const std::array<int, 4>& shape(const Value& v) const { return tape.value(v).shape; }

  Value conv2d(Value x, Value w, const Value* b, const ConvSpec& s) const {
    return tape.conv2d(x, w, b ? *b : NodeId{}, s);
  }
  Value pixel_shuffle(Value x, int r) const { return tape.pixel_shuffle(x, r); }
  Value gelu(Value x) const { return tape.gelu(x); }
  Value concat(const std::vector<Value>& parts) const { return tape.concat(parts); }
  Value add(Value a, Value b) const { return tape.add(a, b); }
  Value mul(Value a, Value b) const { return tape.mul(a, b); }
  Value pixel_norm(Value x, Value g, Value bt, double eps) const {
    return tape.pixel_norm(x, g, bt, eps);
  }
  Value sum(Value x) const { return tape.sum(x); }
  Value l1(Value p, Value t) const { return tape.l1(p, t); }
  Value l2(Value p, Value t) const { return tape.l2(p, t); }
};

// Parameter lookup for DirectEval: hands out references into the store.
template <typename T>
struct DirectParams {
  const ParamStoreT<T>& store;
  using Value = TensorT<T>;

  bool has(const std::string& name) const { return store.has(name); }
  const Value& get(const std::string& name) const { return store.get(name); }
  const Value* maybe(const std::string& name) const {
    return store.has(name) ? &store.get(name) : nullptr;
  }
};

// Parameter lookup for TapeEval: lazily creates one trainable leaf per
// parameter and remembers the mapping for gradient extraction.
template <typename T>
struct TapeParams {
  Tape<T>& tape;
  const ParamStoreT<T>& store;
  std::unordered_map<std::string, NodeId> leaves;
  using Value = NodeId;

  TapeParams(Tape<T>& t, const ParamStoreT<T>& s) : tape(t), store(s) {}

  bool has(const std::string& name) const { return store.has(name); }

  const Value& get(const std::string& name) {
    auto it = leaves.find(name);
    if (it == leaves.end())
      it = leaves.emplace(name, tape.leaf(store.get(name), true)).first;
    return it->second;
  }
  const Value* maybe(const std::string& name) {
    return store.has(name) ? &get(name) : nullptr;
  }

  // Every parameter gets exactly one entry; leaves the loss never reached
  // come back as zeros.
  GradMapT<T> grads(const std::vector<TensorT<T>>& node_grads) const {
    GradMapT<T> out;
    for (const auto& [name, t] : store) {
      auto it = leaves.find(name);
      if (it != leaves.end() && node_grads[it->second.idx].numel() > 0)
        out[name] = node_grads[it->second.idx];
      else
        out[name] = TensorT<T>::zeros(t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
    }
    return out;
  }
};

// Central finite differences against the taped gradient, in the caller's
// precision (use double). fn(cx, params) must build a scalar and be callable
// with both context kinds. Returns max over all parameter entries of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename T, typename Fn>
double grad_check(Fn&& fn, const ParamStoreT<T>& params, double step_scale = 1e-4) {
  Tape<T> tape;
  TapeEval<T> tcx{tape};
  TapeParams<T> tp(tape, params);
  NodeId loss = fn(tcx, tp);
  GradMapT<T> analytic = tp.grads(tape.backward(loss));

  ParamStoreT<T> work = params;
  DirectEval<T> dcx;
  DirectParams<T> dp{work};
  auto eval = [&]() { return double(fn(dcx, dp).data[0]); };

  double max_rel = 0.0;
  for (auto& [name, t] : work) {
    const auto& g = analytic.at(name);
    for (size_t i = 0; i < t.data.size(); ++i) {
      const double x0 = double(t.data[i]);
      const double h = step_scale * std::max(1.0, std::abs(x0));
      t.data[i] = T(x0 + h);
      const double fp = eval();
      t.data[i] = T(x0 - h);
      const double fm = eval();
      t.data[i] = T(x0);
      const double num = (fp - fm) / (2.0 * h);
      const double ana = double(g.data[i]);
      const double rel =
          std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace lkdn
