#pragma once

// Shared helpers for the unit suites: independent brute-force oracles and
// random tensor generators. Oracles are deliberately written as plain
// nested loops over output coordinates so they share no code path with the
// library kernels they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "xgrasp/rng.hpp"
#include "xgrasp/tensor.hpp"

namespace testutil {

inline xgrasp::Tensor random_tensor(std::vector<int> shape, xgrasp::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  xgrasp::Tensor t = xgrasp::Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// Reference cross-correlation: out[co,oy,ox] = sum_{ci,ky,kx} k*in.
inline xgrasp::Tensor conv2d_oracle(const xgrasp::Tensor& in, const xgrasp::Tensor& ker,
                                    int stride, int pad) {
  const int ci_n = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int co_n = ker.dim(0), k = ker.dim(2);
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  xgrasp::Tensor out = xgrasp::Tensor::zeros({co_n, ho, wo});
  for (int co = 0; co < co_n; ++co) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double acc = 0.0;
        for (int ci = 0; ci < ci_n; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride + ky - pad;
              const int ix = ox * stride + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += ker[((static_cast<std::size_t>(co) * ci_n + ci) * k + ky) * k + kx] *
                     in.at3(ci, iy, ix);
            }
          }
        }
        out.at3(co, oy, ox) = acc;
      }
    }
  }
  return out;
}

inline xgrasp::Tensor maxpool2d_oracle(const xgrasp::Tensor& in, int window) {
  const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
  xgrasp::Tensor out = xgrasp::Tensor::zeros({c, h / window, w / window});
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < h / window; ++oy) {
      for (int ox = 0; ox < w / window; ++ox) {
        double best = in.at3(ci, oy * window, ox * window);
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            best = std::max(best, in.at3(ci, oy * window + dy, ox * window + dx));
          }
        }
        out.at3(ci, oy, ox) = best;
      }
    }
  }
  return out;
}

inline double max_abs_diff(const xgrasp::Tensor& a, const xgrasp::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Relative agreement between an analytic and a finite-difference gradient.
// Values that are both tiny are treated as agreeing: central differences in
// 64-bit carry ~1e-11 absolute noise, so below 1e-6 the quotient is noise.
inline bool grad_matches(double analytic, double numeric, double rel_tol,
                         double dead_zone = 1e-6) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < dead_zone) return true;
  return std::abs(analytic - numeric) / scale <= rel_tol;
}

}  // namespace testutil
