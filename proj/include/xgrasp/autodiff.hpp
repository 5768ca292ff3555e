#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

namespace detail {

// Cross-correlation (the deep-learning "conv2d" convention).
// in: [ci_n,h,w], ker: [co_n,ci_n,k,k], out: [co_n,ho,wo], zero-filled by caller.
inline void conv2d_forward(const double* __restrict in, int ci_n, int h, int w,
                           const double* __restrict ker, int co_n, int k, int stride, int pad,
                           double* __restrict out, int ho, int wo) {
  for (int co = 0; co < co_n; ++co) {
    for (int ci = 0; ci < ci_n; ++ci) {
      const double* in_c = in + static_cast<std::size_t>(ci) * h * w;
      const double* ker_c = ker + (static_cast<std::size_t>(co) * ci_n + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double kv = ker_c[ky * k + kx];
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            double* out_row = out + (static_cast<std::size_t>(co) * ho + oy) * wo;
            const double* in_row = in_c + static_cast<std::size_t>(iy) * w;
            if (stride == 1) {
              const int x0 = std::max(0, pad - kx);
              const int x1 = std::min(wo, w - kx + pad);
              const double* src = in_row + (x0 + kx - pad);
              for (int ox = x0; ox < x1; ++ox) out_row[ox] += kv * src[ox - x0];
            } else {
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix >= 0 && ix < w) out_row[ox] += kv * in_row[ix];
              }
            }
          }
        }
      }
    }
  }
}

// d(loss)/d(in) from d(loss)/d(out); accumulates into din.
inline void conv2d_backward_input(const double* __restrict gout, int co_n, int ho, int wo,
                                  const double* __restrict ker, int ci_n, int k, int stride,
                                  int pad, double* __restrict din, int h, int w) {
  for (int co = 0; co < co_n; ++co) {
    for (int ci = 0; ci < ci_n; ++ci) {
      double* din_c = din + static_cast<std::size_t>(ci) * h * w;
      const double* ker_c = ker + (static_cast<std::size_t>(co) * ci_n + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double kv = ker_c[ky * k + kx];
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* gout_row = gout + (static_cast<std::size_t>(co) * ho + oy) * wo;
            double* din_row = din_c + static_cast<std::size_t>(iy) * w;
            if (stride == 1) {
              const int x0 = std::max(0, pad - kx);
              const int x1 = std::min(wo, w - kx + pad);
              double* dst = din_row + (x0 + kx - pad);
              for (int ox = x0; ox < x1; ++ox) dst[ox - x0] += kv * gout_row[ox];
            } else {
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix >= 0 && ix < w) din_row[ix] += kv * gout_row[ox];
              }
            }
          }
        }
      }
    }
  }
}

// d(loss)/d(ker); accumulates into dker.
inline void conv2d_backward_weights(const double* __restrict gout, int co_n, int ho, int wo,
                                    const double* __restrict in, int ci_n, int h, int w, int k,
                                    int stride, int pad, double* __restrict dker) {
  for (int co = 0; co < co_n; ++co) {
    for (int ci = 0; ci < ci_n; ++ci) {
      const double* in_c = in + static_cast<std::size_t>(ci) * h * w;
      double* dker_c = dker + (static_cast<std::size_t>(co) * ci_n + ci) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* gout_row = gout + (static_cast<std::size_t>(co) * ho + oy) * wo;
            const double* in_row = in_c + static_cast<std::size_t>(iy) * w;
            if (stride == 1) {
              const int x0 = std::max(0, pad - kx);
              const int x1 = std::min(wo, w - kx + pad);
              const double* a = gout_row + x0;
              const double* b = in_row + (x0 + kx - pad);
              const int n = x1 - x0;
              if (n >= 12) {
                // four fixed-order accumulators: vectorizable without
                // changing results across runs
                double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                int i = 0;
                for (; i + 4 <= n; i += 4) {
                  a0 += a[i] * b[i];
                  a1 += a[i + 1] * b[i + 1];
                  a2 += a[i + 2] * b[i + 2];
                  a3 += a[i + 3] * b[i + 3];
                }
                for (; i < n; ++i) a0 += a[i] * b[i];
                acc += (a0 + a1) + (a2 + a3);
              } else {
                for (int i = 0; i < n; ++i) acc += a[i] * b[i];
              }
            } else {
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix >= 0 && ix < w) acc += gout_row[ox] * in_row[ix];
              }
            }
          }
          dker_c[ky * k + kx] += acc;
        }
      }
    }
  }
}

inline double sigmoid_value(double x) {
  double v;
  if (x >= 0.0) {
    v = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    v = e / (1.0 + e);
  }
  // keep the output strictly inside (0,1); extreme logits round to 0/1 in f64
  constexpr double kOneMinusUlp = 0x1.fffffffffffffp-1;
  return std::clamp(v, 1e-300, kOneMinusUlp);
}

constexpr double kBceClamp = 1e-12;

}  // namespace detail

/// Define-by-run compute graph with reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every input id precedes its
/// consumer and reverse iteration is a valid topological traversal. Values
/// are computed eagerly at node creation.
class Graph {
 public:
  enum class Op {
    Leaf,
    Conv2d,
    BiasAdd,
    MaxPool2d,
    Relu,
    Sigmoid,
    Add,
    Sum,
    Mean,
    BceLoss,
    MseLoss,
  };

  struct Node {
    Op op = Op::Leaf;
    std::vector<int> inputs;
    Tensor value;
    bool needs_grad = false;
    int stride = 1;
    int pad = 0;
    int window = 1;
    std::vector<std::int32_t> argmax;  // maxpool routing, first occurrence wins
    Tensor target;                     // loss targets
  };

  int input(Tensor v) { return add_leaf(std::move(v), false); }
  int param(Tensor v) { return add_leaf(std::move(v), true); }

  /// conv2d with cross-correlation semantics.
  /// H' = (H + 2*pad - k)/stride + 1, likewise W'.
  int conv2d(int x, int kernel, int stride, int padding) {
    const Tensor& in = value(x);
    const Tensor& ker = value(kernel);
    if (in.rank() != 3 || ker.rank() != 4) {
      throw DimensionError("conv2d expects input [C,H,W] and kernel [Co,Ci,k,k]");
    }
    const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int co = ker.dim(0), k = ker.dim(2);
    if (ker.dim(1) != ci) {
      throw DimensionError("conv2d kernel expects " + std::to_string(ker.dim(1)) +
                           " input channels, image has " + std::to_string(ci));
    }
    if (ker.dim(3) != k || k % 2 == 0) throw ContractError("conv2d kernel must be square with odd k");
    if (stride < 1) throw ContractError("conv2d stride must be >= 1");
    if (padding < 0) throw ContractError("conv2d padding must be >= 0");
    const int ho = (h + 2 * padding - k) / stride + 1;
    const int wo = (w + 2 * padding - k) / stride + 1;
    if (ho <= 0 || wo <= 0) throw DimensionError("conv2d output would be empty");

    Node n;
    n.op = Op::Conv2d;
    n.inputs = {x, kernel};
    n.stride = stride;
    n.pad = padding;
    n.value = Tensor::zeros({co, ho, wo});
    detail::conv2d_forward(in.data(), ci, h, w, ker.data(), co, k, stride, padding,
                           n.value.data(), ho, wo);
    return push(std::move(n));
  }

  /// Adds a per-channel bias [C] to a [C,H,W] map.
  int bias_add(int x, int bias) {
    const Tensor& in = value(x);
    const Tensor& b = value(bias);
    if (in.rank() != 3 || b.rank() != 1 || b.dim(0) != in.dim(0)) {
      throw DimensionError("bias_add expects [C,H,W] and bias [C]");
    }
    Node n;
    n.op = Op::BiasAdd;
    n.inputs = {x, bias};
    n.value = in;
    const int c = in.dim(0);
    const std::size_t plane = static_cast<std::size_t>(in.dim(1)) * in.dim(2);
    for (int ci = 0; ci < c; ++ci) {
      double* row = n.value.data() + ci * plane;
      const double bv = b[static_cast<std::size_t>(ci)];
      for (std::size_t i = 0; i < plane; ++i) row[i] += bv;
    }
    return push(std::move(n));
  }

  /// Non-overlapping max pooling; gradient routes to the argmax cell
  /// (first occurrence in row-major order on ties).
  int maxpool2d(int x, int window) {
    const Tensor& in = value(x);
    if (in.rank() != 3) throw DimensionError("maxpool2d expects [C,H,W]");
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    if (window < 1 || h % window != 0 || w % window != 0) {
      throw DimensionError("maxpool2d window " + std::to_string(window) +
                           " must divide H=" + std::to_string(h) + ", W=" + std::to_string(w));
    }
    const int ho = h / window, wo = w / window;
    Node n;
    n.op = Op::MaxPool2d;
    n.inputs = {x};
    n.window = window;
    n.value = Tensor::zeros({c, ho, wo});
    n.argmax.assign(static_cast<std::size_t>(c) * ho * wo, 0);
    for (int ci = 0; ci < c; ++ci) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double best = -1.0;
          std::int32_t best_idx = -1;
          for (int dy = 0; dy < window; ++dy) {
            const int iy = oy * window + dy;
            for (int dx = 0; dx < window; ++dx) {
              const int ix = ox * window + dx;
              const std::int32_t idx =
                  static_cast<std::int32_t>((static_cast<std::size_t>(ci) * h + iy) * w + ix);
              const double v = in[static_cast<std::size_t>(idx)];
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = idx;
              }
            }
          }
          const std::size_t out_idx = (static_cast<std::size_t>(ci) * ho + oy) * wo + ox;
          n.value[out_idx] = best;
          n.argmax[out_idx] = best_idx;
        }
      }
    }
    return push(std::move(n));
  }

  int relu(int x) {
    Node n;
    n.op = Op::Relu;
    n.inputs = {x};
    n.value = value(x);
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      if (n.value[i] < 0.0) n.value[i] = 0.0;
    }
    return push(std::move(n));
  }

  int sigmoid(int x) {
    Node n;
    n.op = Op::Sigmoid;
    n.inputs = {x};
    n.value = value(x);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = detail::sigmoid_value(n.value[i]);
    return push(std::move(n));
  }

  int add(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += tb[i];
    return push(std::move(n));
  }

  int sum(int x) {
    Node n;
    n.op = Op::Sum;
    n.inputs = {x};
    double acc = 0.0;
    const Tensor& in = value(x);
    for (std::size_t i = 0; i < in.size(); ++i) acc += in[i];
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
  }

  int mean(int x) {
    Node n;
    n.op = Op::Mean;
    n.inputs = {x};
    const Tensor& in = value(x);
    if (in.size() == 0) throw DimensionError("mean of empty tensor");
    double acc = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) acc += in[i];
    n.value = Tensor::scalar(acc / static_cast<double>(in.size()));
    return push(std::move(n));
  }

  /// Mean binary cross-entropy against soft targets in [0,1].
  /// Predictions are clamped away from {0,1} before the logs.
  int bce_loss(int pred, Tensor target) {
    const Tensor& p = value(pred);
    require_same_shape(p, target, "bce_loss");
    Node n;
    n.op = Op::BceLoss;
    n.inputs = {pred};
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double pc = std::clamp(p[i], detail::kBceClamp, 1.0 - detail::kBceClamp);
      acc += -(target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc));
    }
    n.value = Tensor::scalar(acc / static_cast<double>(p.size()));
    n.target = std::move(target);
    return push(std::move(n));
  }

  /// Mean squared error against a fixed target.
  int mse_loss(int pred, Tensor target) {
    const Tensor& p = value(pred);
    require_same_shape(p, target, "mse_loss");
    Node n;
    n.op = Op::MseLoss;
    n.inputs = {pred};
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - target[i];
      acc += d * d;
    }
    n.value = Tensor::scalar(acc / static_cast<double>(p.size()));
    n.target = std::move(target);
    return push(std::move(n));
  }

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Reverse accumulation from a scalar loss node. Returns one gradient per
  /// node id; nodes that do not influence any parameter get an empty tensor.
  std::vector<Tensor> backward(int loss) const {
    const Node& ln = nodes_[static_cast<std::size_t>(loss)];
    if (!ln.value.is_scalar()) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          Tensor::shape_string(ln.value.shape()));
    }
    std::vector<Tensor> grads(nodes_.size(), Tensor::empty());
    auto grad_of = [&](int id) -> Tensor& {
      Tensor& g = grads[static_cast<std::size_t>(id)];
      if (g.size() == 0 && nodes_[static_cast<std::size_t>(id)].value.size() != 0) {
        g = Tensor::zeros(nodes_[static_cast<std::size_t>(id)].value.shape());
      }
      return g;
    };
    grad_of(loss)[0] = 1.0;

    for (int id = loss; id >= 0; --id) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.needs_grad) continue;
      const Tensor& g = grads[static_cast<std::size_t>(id)];
      if (g.size() == 0) continue;  // not on any path to the loss

      switch (n.op) {
        case Op::Leaf:
          break;
        case Op::Conv2d: {
          const Tensor& in = value(n.inputs[0]);
          const Tensor& ker = value(n.inputs[1]);
          const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
          const int co = ker.dim(0), k = ker.dim(2);
          const int ho = n.value.dim(1), wo = n.value.dim(2);
          if (wants_grad(n.inputs[0])) {
            detail::conv2d_backward_input(g.data(), co, ho, wo, ker.data(), ci, k, n.stride,
                                          n.pad, grad_of(n.inputs[0]).data(), h, w);
          }
          if (wants_grad(n.inputs[1])) {
            detail::conv2d_backward_weights(g.data(), co, ho, wo, in.data(), ci, h, w, k,
                                            n.stride, n.pad, grad_of(n.inputs[1]).data());
          }
          break;
        }
        case Op::BiasAdd: {
          if (wants_grad(n.inputs[0])) {
            Tensor& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
          }
          if (wants_grad(n.inputs[1])) {
            Tensor& gb = grad_of(n.inputs[1]);
            const int c = n.value.dim(0);
            const std::size_t plane = static_cast<std::size_t>(n.value.dim(1)) * n.value.dim(2);
            for (int ci = 0; ci < c; ++ci) {
              double acc = 0.0;
              const double* row = g.data() + ci * plane;
              for (std::size_t i = 0; i < plane; ++i) acc += row[i];
              gb[static_cast<std::size_t>(ci)] += acc;
            }
          }
          break;
        }
        case Op::MaxPool2d: {
          if (wants_grad(n.inputs[0])) {
            Tensor& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
              gx[static_cast<std::size_t>(n.argmax[i])] += g[i];
            }
          }
          break;
        }
        case Op::Relu: {
          if (wants_grad(n.inputs[0])) {
            const Tensor& in = value(n.inputs[0]);
            Tensor& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
              if (in[i] > 0.0) gx[i] += g[i];
            }
          }
          break;
        }
        case Op::Sigmoid: {
          if (wants_grad(n.inputs[0])) {
            Tensor& gx = grad_of(n.inputs[0]);
            for (std::size_t i = 0; i < g.size(); ++i) {
              const double y = n.value[i];
              gx[i] += g[i] * y * (1.0 - y);
            }
          }
          break;
        }
        case Op::Add: {
          for (int in_id : n.inputs) {
            if (wants_grad(in_id)) {
              Tensor& gx = grad_of(in_id);
              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            }
          }
          break;
        }
        case Op::Sum: {
          if (wants_grad(n.inputs[0])) {
            Tensor& gx = grad_of(n.inputs[0]);
            const double gv = g[0];
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gv;
          }
          break;
        }
        case Op::Mean: {
          if (wants_grad(n.inputs[0])) {
            Tensor& gx = grad_of(n.inputs[0]);
            const double gv = g[0] / static_cast<double>(gx.size());
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gv;
          }
          break;
        }
        case Op::BceLoss: {
          if (wants_grad(n.inputs[0])) {
            const Tensor& p = value(n.inputs[0]);
            Tensor& gx = grad_of(n.inputs[0]);
            const double gv = g[0] / static_cast<double>(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
              const double pc = std::clamp(p[i], detail::kBceClamp, 1.0 - detail::kBceClamp);
              gx[i] += gv * (pc - n.target[i]) / (pc * (1.0 - pc));
            }
          }
          break;
        }
        case Op::MseLoss: {
          if (wants_grad(n.inputs[0])) {
            const Tensor& p = value(n.inputs[0]);
            Tensor& gx = grad_of(n.inputs[0]);
            const double gv = 2.0 * g[0] / static_cast<double>(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) gx[i] += gv * (p[i] - n.target[i]);
          }
          break;
        }
      }
    }
    return grads;
  }

 private:
  bool wants_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  int add_leaf(Tensor v, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(v);
    n.needs_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push(Node n) {
    n.needs_grad = false;
    for (int in_id : n.inputs) n.needs_grad = n.needs_grad || wants_grad(in_id);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  // deque: node references stay valid while the graph grows
  std::deque<Node> nodes_;
};

}  // namespace xgrasp
