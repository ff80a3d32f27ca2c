#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "lkdn/tensor.hpp"

namespace lkdn {

struct NodeId {
  int32_t idx = -1;
  uint32_t tape = 0;
  bool valid() const { return idx >= 0; }
};

enum class Op : uint8_t {
  Leaf,
  Conv2d,
  PixelShuffle,
  Gelu,
  Concat,
  Add,
  Mul,
  PixelNorm,
  SumAll,
  L1,
  L2,
};

// Eager-forward, taped-reverse autodiff. Values are computed immediately via
// the tensor kernels; backward replays the recorded nodes once, in reverse.
template <typename T>
class Tape {
 public:
  Tape() : id_(next_id()++) {}

  uint32_t id() const { return id_; }
  size_t size() const { return nodes_.size(); }

  NodeId leaf(TensorT<T> v, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(v);
    n.needs_grad = requires_grad;
    return push(std::move(n));
  }

  NodeId conv2d(NodeId x, NodeId w, NodeId b, const ConvSpec& spec) {
    Node n;
    n.op = Op::Conv2d;
    n.in = {check(x), check(w), b.valid() ? check(b) : -1};
    n.spec = spec;
    const TensorT<T>* bias = b.valid() ? &val(n.in[2]) : nullptr;
    n.val = lkdn::conv2d(val(n.in[0]), val(n.in[1]), bias, spec);
    return push(std::move(n));
  }

  NodeId pixel_shuffle(NodeId x, int r) {
    Node n;
    n.op = Op::PixelShuffle;
    n.in = {check(x), -1, -1};
    n.aux = r;
    n.val = lkdn::pixel_shuffle(val(n.in[0]), r);
    return push(std::move(n));
  }

  NodeId gelu(NodeId x) {
    Node n;
    n.op = Op::Gelu;
    n.in = {check(x), -1, -1};
    n.val = lkdn::gelu(val(n.in[0]));
    return push(std::move(n));
  }

  NodeId concat(const std::vector<NodeId>& parts) {
    Node n;
    n.op = Op::Concat;
    std::vector<const TensorT<T>*> vals;
    for (auto p : parts) {
      n.many.push_back(check(p));
      vals.push_back(&val(n.many.back()));
    }
    n.val = lkdn::concat_channels(vals);
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.in = {check(a), check(b), -1};
    n.val = lkdn::add(val(n.in[0]), val(n.in[1]));
    return push(std::move(n));
  }

  NodeId mul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Mul;
    n.in = {check(a), check(b), -1};
    n.val = lkdn::mul(val(n.in[0]), val(n.in[1]));
    return push(std::move(n));
  }

  NodeId pixel_norm(NodeId x, NodeId gamma, NodeId beta, double eps) {
    Node n;
    n.op = Op::PixelNorm;
    n.in = {check(x), check(gamma), check(beta)};
    n.eps = eps;
    n.val = lkdn::pixel_norm(val(n.in[0]), val(n.in[1]), val(n.in[2]), eps);
    return push(std::move(n));
  }

  NodeId sum(NodeId x) {
    Node n;
    n.op = Op::SumAll;
    n.in = {check(x), -1, -1};
    n.val = TensorT<T>::scalar(T(sum_all(val(n.in[0]))));
    return push(std::move(n));
  }

  NodeId l1(NodeId pred, NodeId target) { return loss_node(Op::L1, pred, target); }
  NodeId l2(NodeId pred, NodeId target) { return loss_node(Op::L2, pred, target); }

  const TensorT<T>& value(NodeId id) const { return nodes_[check(id)].val; }

  // Gradients of a scalar node w.r.t. every node that needs them, indexed by
  // node position. Entries stay empty for nodes outside the backward cone; a
  // reachability-false leaf that requires grad reads as a zero gradient.
  std::vector<TensorT<T>> backward(NodeId loss) const {
    const int32_t li = check(loss);
    if (nodes_[li].val.numel() != 1)
      throw UsageError("backward: loss must be scalar, got shape " + nodes_[li].val.shape_str());
    std::vector<TensorT<T>> grads(nodes_.size());
    if (!nodes_[li].needs_grad) return grads;
    grads[li] = TensorT<T>::scalar(T(1));
    for (int32_t i = li; i >= 0; --i) {
      const Node& n = nodes_[i];
      if (grads[i].numel() == 0 || n.op == Op::Leaf) continue;
      step_back(n, grads[i], grads);
    }
    return grads;
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::array<int32_t, 3> in{-1, -1, -1};
    std::vector<int32_t> many;
    TensorT<T> val;
    ConvSpec spec;
    int aux = 0;
    double eps = 0.0;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  uint32_t id_;

  static std::atomic<uint32_t>& next_id() {
    static std::atomic<uint32_t> c{1};
    return c;
  }

  const TensorT<T>& val(int32_t i) const { return nodes_[i].val; }

  int32_t check(NodeId id) const {
    if (!id.valid() || id.tape != id_ || size_t(id.idx) >= nodes_.size())
      throw UsageError("node belongs to a different tape or is invalid");
    return id.idx;
  }

  NodeId push(Node&& n) {
    if (n.op != Op::Leaf) {
      for (int32_t i : n.in)
        if (i >= 0 && nodes_[i].needs_grad) n.needs_grad = true;
      for (int32_t i : n.many)
        if (nodes_[i].needs_grad) n.needs_grad = true;
    }
    nodes_.push_back(std::move(n));
    return NodeId{int32_t(nodes_.size() - 1), id_};
  }

  NodeId loss_node(Op op, NodeId pred, NodeId target) {
    Node n;
    n.op = op;
    n.in = {check(pred), check(target), -1};
    const double v = op == Op::L1 ? l1_loss(val(n.in[0]), val(n.in[1]))
                                  : l2_loss(val(n.in[0]), val(n.in[1]));
    n.val = TensorT<T>::scalar(T(v));
    return push(std::move(n));
  }

  bool wants(int32_t i) const { return i >= 0 && nodes_[i].needs_grad; }

  TensorT<T>& acc(std::vector<TensorT<T>>& grads, int32_t i) const {
    if (grads[i].numel() == 0) {
      const auto& s = nodes_[i].val.shape;
      grads[i] = TensorT<T>::zeros(s[0], s[1], s[2], s[3]);
    }
    return grads[i];
  }

  void step_back(const Node& n, const TensorT<T>& g, std::vector<TensorT<T>>& grads) const {
    switch (n.op) {
      case Op::Conv2d: {
        const auto& x = val(n.in[0]);
        const auto& w = val(n.in[1]);
        TensorT<T>* gx = wants(n.in[0]) ? &acc(grads, n.in[0]) : nullptr;
        TensorT<T>* gw = wants(n.in[1]) ? &acc(grads, n.in[1]) : nullptr;
        TensorT<T>* gb = wants(n.in[2]) ? &acc(grads, n.in[2]) : nullptr;
        conv2d_backward(x, w, n.spec, g, gx, gw, gb);
        break;
      }
      case Op::PixelShuffle: {
        if (wants(n.in[0])) {
          TensorT<T> gx = pixel_unshuffle(g, n.aux);
          auto& dst = acc(grads, n.in[0]);
          for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += gx.data[i];
        }
        break;
      }
      case Op::Gelu: {
        if (wants(n.in[0])) {
          const auto& x = val(n.in[0]);
          auto& dst = acc(grads, n.in[0]);
          for (size_t i = 0; i < dst.data.size(); ++i)
            dst.data[i] += T(double(g.data[i]) * gelu_grad_scalar(double(x.data[i])));
        }
        break;
      }
      case Op::Concat: {
        int c0 = 0;
        for (int32_t pi : n.many) {
          const int pc = nodes_[pi].val.c();
          if (wants(pi)) {
            TensorT<T> slice = slice_channels(g, c0, c0 + pc);
            auto& dst = acc(grads, pi);
            for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += slice.data[i];
          }
          c0 += pc;
        }
        break;
      }
      case Op::Add: {
        for (int k = 0; k < 2; ++k)
          if (wants(n.in[k])) {
            auto& dst = acc(grads, n.in[k]);
            for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.data[i];
          }
        break;
      }
      case Op::Mul: {
        for (int k = 0; k < 2; ++k)
          if (wants(n.in[k])) {
            const auto& other = val(n.in[1 - k]);
            auto& dst = acc(grads, n.in[k]);
            for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.data[i] * other.data[i];
          }
        break;
      }
      case Op::PixelNorm: {
        const auto& x = val(n.in[0]);
        const auto& gamma = val(n.in[1]);
        TensorT<T>* gx = wants(n.in[0]) ? &acc(grads, n.in[0]) : nullptr;
        TensorT<T>* gg = wants(n.in[1]) ? &acc(grads, n.in[1]) : nullptr;
        TensorT<T>* gb = wants(n.in[2]) ? &acc(grads, n.in[2]) : nullptr;
        pixel_norm_backward(x, gamma, n.eps, g, gx, gg, gb);
        break;
      }
      case Op::SumAll: {
        if (wants(n.in[0])) {
          auto& dst = acc(grads, n.in[0]);
          const T gv = g.data[0];
          for (auto& v : dst.data) v += gv;
        }
        break;
      }
      case Op::L1:
      case Op::L2: {
        const auto& pred = val(n.in[0]);
        const auto& target = val(n.in[1]);
        const double gv = double(g.data[0]);
        const double inv_n = 1.0 / double(pred.numel());
        for (int k = 0; k < 2; ++k) {
          if (!wants(n.in[k])) continue;
          const double sgn = k == 0 ? 1.0 : -1.0;
          auto& dst = acc(grads, n.in[k]);
          for (size_t i = 0; i < dst.data.size(); ++i) {
            const double d = double(pred.data[i]) - double(target.data[i]);
            // L1 subgradient at zero residual is 0 by convention.
            const double dd = n.op == Op::L1 ? (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) : 2.0 * d;
            dst.data[i] += T(sgn * gv * dd * inv_n);
          }
        }
        break;
      }
      case Op::Leaf:
        break;
    }
  }
};

}  // namespace lkdn
