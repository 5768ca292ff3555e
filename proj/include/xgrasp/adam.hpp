#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

struct AdamConfig {
  double learning_rate = 1e-5;  // training-recipe default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter first/second moment estimates plus the shared step count.
struct AdamState {
  AdamConfig hyper;
  long long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const std::vector<Tensor>& params, AdamConfig cfg = {}) {
    AdamState s;
    s.hyper = cfg;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
      s.m.push_back(Tensor::zeros(p.shape()));
      s.v.push_back(Tensor::zeros(p.shape()));
    }
    return s;
  }
};

/// One bias-corrected Adam update; increments the step count.
inline void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  const double b1 = state.hyper.beta1;
  const double b2 = state.hyper.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    require_same_shape(p, g, "adam_step grad");
    require_same_shape(p, state.m[i], "adam_step moment");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= state.hyper.learning_rate * mhat / (std::sqrt(vhat) + state.hyper.epsilon);
    }
  }
}

}  // namespace xgrasp
