#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/autodiff.hpp"
#include "xgrasp/errors.hpp"
#include "xgrasp/rng.hpp"
#include "xgrasp/teacher.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

enum class Activation { Relu, Sigmoid };

struct LayerSpec {
  enum class Kind { Conv, MaxPool, Act } kind = Kind::Conv;
  // Conv
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  // MaxPool
  int window = 2;
  // Act
  Activation act = Activation::Relu;

  static LayerSpec conv(int out_channels, int kernel, int stride, int pad) {
    LayerSpec l;
    l.kind = Kind::Conv;
    l.out_channels = out_channels;
    l.kernel = kernel;
    l.stride = stride;
    l.pad = pad;
    return l;
  }
  static LayerSpec maxpool(int window) {
    LayerSpec l;
    l.kind = Kind::MaxPool;
    l.window = window;
    return l;
  }
  static LayerSpec activation(Activation a) {
    LayerSpec l;
    l.kind = Kind::Act;
    l.act = a;
    return l;
  }
};

/// Fully convolutional student. No dense layers, so any input with H and W
/// divisible by the output stride is accepted; the head is a sigmoid over
/// 16 orientation channels.
struct NetworkParams {
  int input_channels = 1;
  std::vector<LayerSpec> layers;
  std::vector<Tensor> kernels;  // per conv layer
  std::vector<Tensor> biases;   // per conv layer

  int output_stride() const {
    int s = 1;
    for (const LayerSpec& l : layers) {
      if (l.kind == LayerSpec::Kind::MaxPool) s *= l.window;
      if (l.kind == LayerSpec::Kind::Conv) s *= l.stride;
    }
    return s;
  }

  // Parameters in a fixed order (kernel, bias per conv layer) for the
  // optimizer and the checkpoint payload.
  std::vector<Tensor> flatten() const {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      out.push_back(kernels[i]);
      out.push_back(biases[i]);
    }
    return out;
  }
  void unflatten(std::vector<Tensor> flat) {
    if (flat.size() != kernels.size() * 2) throw DimensionError("unflatten: wrong tensor count");
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      kernels[i] = std::move(flat[2 * i]);
      biases[i] = std::move(flat[2 * i + 1]);
    }
  }
};

/// The desk-scale dense grasp-quality stack: two pooled conv blocks and a
/// 16-channel sigmoid head, output stride 4. The first layer accepts
/// 1-channel depth, 3-channel RGB, or 4-channel RGB-D input.
inline NetworkParams build_network(int input_channels, std::uint64_t seed) {
  if (input_channels != 1 && input_channels != 3 && input_channels != 4) {
    throw ValidationError("input channels must be 1, 3 or 4");
  }
  NetworkParams net;
  net.input_channels = input_channels;
  net.layers = {
      LayerSpec::conv(16, 5, 1, 2), LayerSpec::activation(Activation::Relu),
      LayerSpec::maxpool(2),
      LayerSpec::conv(32, 3, 1, 1), LayerSpec::activation(Activation::Relu),
      LayerSpec::conv(32, 3, 1, 1), LayerSpec::activation(Activation::Relu),
      LayerSpec::maxpool(2),
      LayerSpec::conv(64, 3, 1, 1), LayerSpec::activation(Activation::Relu),
      LayerSpec::conv(kThetaBins, 1, 1, 0), LayerSpec::activation(Activation::Sigmoid),
  };

  Rng rng = make_rng(seed);
  int in_c = input_channels;
  for (const LayerSpec& l : net.layers) {
    if (l.kind != LayerSpec::Kind::Conv) continue;
    const int fan_in = in_c * l.kernel * l.kernel;
    const double limit = std::sqrt(6.0 / fan_in);  // He-uniform
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor k = Tensor::zeros({l.out_channels, in_c, l.kernel, l.kernel});
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = dist(rng);
    net.kernels.push_back(std::move(k));
    net.biases.push_back(Tensor::zeros({l.out_channels}));
    in_c = l.out_channels;
  }
  return net;
}

namespace detail {

inline void maxpool2d_forward(const double* in, int c, int h, int w, int window, double* out) {
  const int ho = h / window, wo = w / window;
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double best = in[(static_cast<std::size_t>(ci) * h + oy * window) * w + ox * window];
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            best = std::max(
                best, in[(static_cast<std::size_t>(ci) * h + oy * window + dy) * w + ox * window + dx]);
          }
        }
        out[(static_cast<std::size_t>(ci) * ho + oy) * wo + ox] = best;
      }
    }
  }
}

}  // namespace detail

inline void check_network_input(const NetworkParams& net, const Tensor& image) {
  if (image.rank() != 3) throw DimensionError("network input must be [C,H,W]");
  if (image.dim(0) != net.input_channels) {
    throw DimensionError("network expects " + std::to_string(net.input_channels) +
                         " channels, got " + std::to_string(image.dim(0)));
  }
  const int stride = net.output_stride();
  if (image.dim(1) % stride != 0 || image.dim(2) % stride != 0) {
    throw DimensionError("input H and W must be divisible by " + std::to_string(stride));
  }
}

/// Plain inference pass (no tape).
inline Tensor forward(const NetworkParams& net, const Tensor& image) {
  check_network_input(net, image);
  Tensor cur = image;
  std::size_t conv_i = 0;
  for (const LayerSpec& l : net.layers) {
    switch (l.kind) {
      case LayerSpec::Kind::Conv: {
        const Tensor& ker = net.kernels[conv_i];
        const Tensor& bias = net.biases[conv_i];
        ++conv_i;
        const int ci = cur.dim(0), h = cur.dim(1), w = cur.dim(2);
        const int ho = (h + 2 * l.pad - l.kernel) / l.stride + 1;
        const int wo = (w + 2 * l.pad - l.kernel) / l.stride + 1;
        Tensor out = Tensor::zeros({l.out_channels, ho, wo});
        detail::conv2d_forward(cur.data(), ci, h, w, ker.data(), l.out_channels, l.kernel,
                               l.stride, l.pad, out.data(), ho, wo);
        const std::size_t plane = static_cast<std::size_t>(ho) * wo;
        for (int co = 0; co < l.out_channels; ++co) {
          double* row = out.data() + co * plane;
          const double b = bias[static_cast<std::size_t>(co)];
          for (std::size_t i = 0; i < plane; ++i) row[i] += b;
        }
        cur = std::move(out);
        break;
      }
      case LayerSpec::Kind::MaxPool: {
        const int c = cur.dim(0), h = cur.dim(1), w = cur.dim(2);
        Tensor out = Tensor::zeros({c, h / l.window, w / l.window});
        detail::maxpool2d_forward(cur.data(), c, h, w, l.window, out.data());
        cur = std::move(out);
        break;
      }
      case LayerSpec::Kind::Act: {
        if (l.act == Activation::Relu) {
          for (std::size_t i = 0; i < cur.size(); ++i) {
            if (cur[i] < 0.0) cur[i] = 0.0;
          }
        } else {
          for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = detail::sigmoid_value(cur[i]);
        }
        break;
      }
    }
  }
  return cur;
}

/// Dense prediction as a score volume on the stride-4 grid.
inline ScoreVolume forward_dense(const NetworkParams& net, const Tensor& image) {
  ScoreVolume vol;
  vol.scores = forward(net, image);
  vol.cell_stride = net.output_stride();
  vol.modality = net.input_channels == 1   ? "depth-student"
                 : net.input_channels == 3 ? "rgb-student"
                                           : "rgbd-student";
  return vol;
}

/// Differentiable pass on a tape; returns the parameter node ids so the
/// caller can pull gradients after backward().
struct NetworkGraph {
  std::vector<int> kernel_nodes;
  std::vector<int> bias_nodes;
  int output = -1;
};

inline NetworkGraph build_graph(Graph& g, const NetworkParams& net, const Tensor& image) {
  check_network_input(net, image);
  NetworkGraph ng;
  int cur = g.input(image);
  std::size_t conv_i = 0;
  for (const LayerSpec& l : net.layers) {
    switch (l.kind) {
      case LayerSpec::Kind::Conv: {
        const int k = g.param(net.kernels[conv_i]);
        const int b = g.param(net.biases[conv_i]);
        ++conv_i;
        ng.kernel_nodes.push_back(k);
        ng.bias_nodes.push_back(b);
        cur = g.bias_add(g.conv2d(cur, k, l.stride, l.pad), b);
        break;
      }
      case LayerSpec::Kind::MaxPool:
        cur = g.maxpool2d(cur, l.window);
        break;
      case LayerSpec::Kind::Act:
        cur = (l.act == Activation::Relu) ? g.relu(cur) : g.sigmoid(cur);
        break;
    }
  }
  ng.output = cur;
  return ng;
}

}  // namespace xgrasp
