#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/rng.hpp"
#include "xgrasp/scene.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

// Depth reading for "no sensor return"; downstream code treats it as table.
constexpr double kDepthSentinel = 0.0;

constexpr double kDefaultCameraHeight = 0.7;  // meters above the table

/// Synthetic depth-sensor failure model. Rates are calibration knobs; the
/// defaults make depth-only grasping measurably fail on non-opaque objects.
struct DepthNoiseModel {
  double gaussian_sigma = 0.001;        // meters
  double transparent_pass_rate = 0.96;  // fraction reading through to the table
  double specular_dropout_rate = 0.85;  // fraction with no return at all
  double specular_scatter_band = 0.1;   // scattered readings in [camH-band, camH]
};

/// Per-pixel depth from a fixed overhead camera.
/// Opaque surfaces read true range; transparent ones mostly pass through to
/// the table; specular ones mostly drop out to the sentinel.
inline Tensor render_depth(const Scene& scene, double camera_height, std::uint64_t seed,
                           const DepthNoiseModel& noise = {}) {
  const double max_h = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < scene.heightmap.size(); ++i) m = std::max(m, scene.heightmap[i]);
    return m;
  }();
  if (!(camera_height > max_h)) {
    throw ContractError("camera height must exceed the tallest object");
  }
  const int h = scene.height(), w = scene.width();
  Tensor depth = Tensor::zeros({1, h, w});
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, noise.gaussian_sigma > 0 ? noise.gaussian_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto jitter = [&]() { return noise.gaussian_sigma > 0 ? gauss(rng) : 0.0; };

  for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
    const double true_depth = camera_height - scene.heightmap[i];
    double d;
    switch (scene.material[i]) {
      case MaterialClass::Opaque:
        d = true_depth + jitter();
        break;
      case MaterialClass::Transparent:
        if (unit(rng) < noise.transparent_pass_rate) {
          d = camera_height + jitter();  // emitted light passes through
        } else {
          d = true_depth;
        }
        break;
      case MaterialClass::Specular:
      default:
        if (unit(rng) < noise.specular_dropout_rate) {
          d = kDepthSentinel;  // pattern scattered away, no return
        } else {
          std::uniform_real_distribution<double> scatter(camera_height - noise.specular_scatter_band,
                                                         camera_height);
          d = scatter(rng);
        }
        break;
    }
    depth[i] = d;
  }
  return depth;
}

/// Height above the table as recovered from an observed depth image.
/// Sentinel pixels count as table height.
inline Tensor observed_height(const Tensor& depth, double camera_height) {
  Tensor h = Tensor::zeros({depth.dim(1), depth.dim(2)});
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = depth[i];
    h[i] = (d == kDepthSentinel) ? 0.0 : std::max(0.0, camera_height - d);
  }
  return h;
}

namespace detail {

constexpr double kLightX = 0.35, kLightY = 0.25, kLightZ = 0.9;

// Lambert term normalized so flat surfaces shade to exactly 1. Gradients are
// taken within one object's surface only, so a height step does not bleed
// shading onto the neighboring table.
inline double shade_at(const Scene& scene, int py, int px) {
  const int h = scene.height(), w = scene.width();
  const int id = scene.object_id[static_cast<std::size_t>(py) * w + px];
  auto height = [&](int y, int x) {
    if (y < 0 || y >= h || x < 0 || x >= w ||
        scene.object_id[static_cast<std::size_t>(y) * w + x] != id) {
      return scene.height_at(py, px);
    }
    return scene.height_at(y, x);
  };
  const double inv = 1.0 / (2.0 * scene.spec.resolution);
  const double gx = (height(py, px + 1) - height(py, px - 1)) * inv;
  const double gy = (height(py + 1, px) - height(py - 1, px)) * inv;
  // normal ~ (-gx, -gy, 1)
  const double nn = std::sqrt(gx * gx + gy * gy + 1.0);
  const double dot = (-gx * kLightX - gy * kLightY + kLightZ) / nn;
  return std::clamp(dot / kLightZ, 0.15, 1.0);
}

inline bool silhouette_edge(const Scene& scene, int py, int px) {
  const int id = scene.object_id[static_cast<std::size_t>(py) * scene.width() + px];
  if (id < 0) return false;
  const int h = scene.height(), w = scene.width();
  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int ny = py + dy[k], nx = px + dx[k];
    if (ny < 0 || ny >= h || nx < 0 || nx >= w) return true;
    if (scene.object_id[static_cast<std::size_t>(ny) * w + nx] != id) return true;
  }
  return false;
}

// Outward-facing silhouette direction (sum of offsets toward non-object
// neighbors); zero when the pixel is interior.
inline std::pair<double, double> silhouette_outward(const Scene& scene, int py, int px) {
  const int id = scene.object_id[static_cast<std::size_t>(py) * scene.width() + px];
  const int h = scene.height(), w = scene.width();
  double ox = 0.0, oy = 0.0;
  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int ny = py + dy[k], nx = px + dx[k];
    const bool outside = ny < 0 || ny >= h || nx < 0 || nx >= w ||
                         scene.object_id[static_cast<std::size_t>(ny) * w + nx] != id;
    if (outside) {
      ox += dx[k];
      oy += dy[k];
    }
  }
  return {ox, oy};
}

// Occlusion-boundary terms: the light-facing edge catches a highlight, the
// far edge falls into contact shadow. Keeps silhouettes detectable in RGB
// whatever the albedo.
inline void apply_edge_lighting(const Scene& scene, int py, int px, double base[3]) {
  if (!silhouette_edge(scene, py, px)) return;
  const auto [ox, oy] = silhouette_outward(scene, py, px);
  if (ox * kLightX + oy * kLightY >= 0.0) {
    for (int c = 0; c < 3; ++c) base[c] = std::min(1.0, base[c] + 0.35);
  } else {
    for (int c = 0; c < 3; ++c) base[c] *= 0.4;
  }
}

}  // namespace detail

/// RGB image under a brightness scalar. Opaque/specular bodies are shaded
/// albedo; transparent bodies blend toward the table with a bright rim;
/// specular bodies carry saturated highlight blobs.
inline Tensor render_rgb(const Scene& scene, double illum, std::uint64_t seed,
                         double noise_sigma = 0.01) {
  if (illum < 0.25 || illum > 2.0) throw ContractError("illum must be in [0.25, 2.0]");
  const int h = scene.height(), w = scene.width();
  Tensor rgb = Tensor::zeros({3, h, w});

  // Highlight blobs per specular object, drawn before per-pixel noise so the
  // two streams stay independent of each other.
  struct Blob {
    double x, y, r;
  };
  std::vector<std::vector<Blob>> blobs(scene.objects.size());
  {
    Rng brng = make_rng(seed, 1);
    std::uniform_int_distribution<int> nblobs(2, 3);
    std::uniform_real_distribution<double> rad(0.008, 0.015);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      const SceneObject& o = scene.objects[oi];
      if (o.material != MaterialClass::Specular || !scene.alive[oi]) continue;
      const int n = nblobs(brng);
      for (int k = 0; k < n; ++k) {
        const double bx = o.x + (unit(brng) - 0.5) * o.dim_x;
        const double by = o.y + (unit(brng) - 0.5) * o.dim_y;
        blobs[oi].push_back({bx, by, rad(brng)});
      }
    }
  }

  Rng nrng = make_rng(seed, 0);
  std::normal_distribution<double> gauss(0.0, noise_sigma > 0 ? noise_sigma : 1.0);

  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const std::size_t idx = static_cast<std::size_t>(py) * w + px;
      const RgbColor& a = scene.albedo[idx];
      const RgbColor& table = scene.spec.table_color;
      double base[3];
      switch (scene.material[idx]) {
        case MaterialClass::Opaque: {
          const double s = detail::shade_at(scene, py, px);
          base[0] = a.r * s;
          base[1] = a.g * s;
          base[2] = a.b * s;
          detail::apply_edge_lighting(scene, py, px, base);
          break;
        }
        case MaterialClass::Transparent: {
          base[0] = 0.35 * a.r + 0.65 * table.r;
          base[1] = 0.35 * a.g + 0.65 * table.g;
          base[2] = 0.35 * a.b + 0.65 * table.b;
          if (detail::silhouette_edge(scene, py, px)) {
            base[0] = base[1] = base[2] = 0.95;
          }
          break;
        }
        case MaterialClass::Specular:
        default: {
          const double s = detail::shade_at(scene, py, px);
          base[0] = a.r * s;
          base[1] = a.g * s;
          base[2] = a.b * s;
          detail::apply_edge_lighting(scene, py, px, base);
          const int id = scene.object_id[idx];
          if (id >= 0) {
            const double wx = (px + 0.5) * scene.spec.resolution;
            const double wy = (py + 0.5) * scene.spec.resolution;
            for (const auto& blob : blobs[static_cast<std::size_t>(id)]) {
              if (std::hypot(wx - blob.x, wy - blob.y) <= blob.r) {
                base[0] = base[1] = base[2] = 1.0;
                break;
              }
            }
          }
          break;
        }
      }
      for (int c = 0; c < 3; ++c) {
        double v = illum * base[c];
        if (noise_sigma > 0) v += gauss(nrng);
        rgb.at3(c, py, px) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return rgb;
}

/// Co-registered depth/RGB pair of one scene.
struct PairedSample {
  Tensor depth;  // [1,H,W], meters from the camera
  Tensor rgb;    // [3,H,W], in [0,1]
  bool opaque_only = false;
  std::string scene_id;
};

inline PairedSample render_pair(const Scene& scene, double camera_height, double illum,
                                std::uint64_t seed, const DepthNoiseModel& noise = {},
                                double rgb_noise_sigma = 0.01, std::string scene_id = {}) {
  PairedSample s;
  s.depth = render_depth(scene, camera_height, sub_seed(seed, 100), noise);
  s.rgb = render_rgb(scene, illum, sub_seed(seed, 200), rgb_noise_sigma);
  s.opaque_only = scene.spec.all_opaque();
  s.scene_id = std::move(scene_id);
  return s;
}

struct ColorJitter {
  double brightness = 1.0;  // multiplicative gain
  double contrast = 1.0;    // (x - 0.5) * c + 0.5
  double hue_shift = 0.0;   // radians around the gray axis

  bool neutral() const { return brightness == 1.0 && contrast == 1.0 && hue_shift == 0.0; }
};

constexpr int kThetaBins = 16;
// One rotation-augmentation step; matches the grasp orientation bin width.
inline constexpr double kThetaBinWidth = std::numbers::pi / kThetaBins;

/// One spatial+color variant: rotation by rotation_steps * pi/16 about the
/// image center, optional horizontal flip, color jitter on RGB only. Depth
/// and RGB move through the identical geometric map, so co-registration is
/// preserved pixel for pixel; depth values are never altered radiometrically.
inline PairedSample transform_pair(const PairedSample& in, int rotation_steps, bool flip,
                                   const ColorJitter& jitter) {
  const int h = in.depth.dim(1), w = in.depth.dim(2);
  if (h != w) throw ContractError("transform_pair expects square images (pad first)");

  PairedSample out;
  out.opaque_only = in.opaque_only;
  out.scene_id = in.scene_id;
  out.depth = Tensor::zeros({1, h, w});
  out.rgb = Tensor::zeros({3, h, w});

  const bool identity_map = (rotation_steps % (2 * kThetaBins) == 0) && !flip;
  double fill_depth = 0.0, fill_rgb[3] = {0, 0, 0};
  if (!identity_map) {
    // Median is the table for any scene that is mostly table.
    std::vector<double> tmp(in.depth.data(), in.depth.data() + in.depth.size());
    std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
    fill_depth = tmp[tmp.size() / 2];
    for (int c = 0; c < 3; ++c) {
      tmp.assign(in.rgb.data() + static_cast<std::size_t>(c) * h * w,
                 in.rgb.data() + static_cast<std::size_t>(c + 1) * h * w);
      std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
      fill_rgb[c] = tmp[tmp.size() / 2];
    }
  }

  const double angle = rotation_steps * kThetaBinWidth;
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double cx = 0.5 * w, cy = 0.5 * h;
  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < w; ++ox) {
      int sx_i, sy_i;
      if (identity_map) {
        sx_i = ox;
        sy_i = oy;
      } else {
        double dx = (ox + 0.5) - cx;
        const double dy = (oy + 0.5) - cy;
        if (flip) dx = -dx;
        // inverse map: content rotates by +angle
        const double sx = ca * dx + sa * dy + cx;
        const double sy = -sa * dx + ca * dy + cy;
        sx_i = static_cast<int>(std::floor(sx));
        sy_i = static_cast<int>(std::floor(sy));
      }
      const bool inside = sx_i >= 0 && sx_i < w && sy_i >= 0 && sy_i < h;
      out.depth.at3(0, oy, ox) = inside ? in.depth.at3(0, sy_i, sx_i) : fill_depth;
      for (int c = 0; c < 3; ++c) {
        out.rgb.at3(c, oy, ox) = inside ? in.rgb.at3(c, sy_i, sx_i) : fill_rgb[c];
      }
    }
  }

  if (!jitter.neutral()) {
    // hue rotation about the RGB gray axis
    const double hc = std::cos(jitter.hue_shift), hs = std::sin(jitter.hue_shift);
    const double m00 = hc + (1.0 - hc) / 3.0;
    const double m01 = (1.0 - hc) / 3.0 - hs / std::sqrt(3.0);
    const double m02 = (1.0 - hc) / 3.0 + hs / std::sqrt(3.0);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
      double r = out.rgb[i], g = out.rgb[plane + i], b = out.rgb[2 * plane + i];
      r = (r - 0.5) * jitter.contrast + 0.5;
      g = (g - 0.5) * jitter.contrast + 0.5;
      b = (b - 0.5) * jitter.contrast + 0.5;
      r *= jitter.brightness;
      g *= jitter.brightness;
      b *= jitter.brightness;
      const double nr = m00 * r + m01 * g + m02 * b;
      const double ng = m02 * r + m00 * g + m01 * b;
      const double nb = m01 * r + m02 * g + m00 * b;
      out.rgb[i] = std::clamp(nr, 0.0, 1.0);
      out.rgb[plane + i] = std::clamp(ng, 0.0, 1.0);
      out.rgb[2 * plane + i] = std::clamp(nb, 0.0, 1.0);
    }
  }
  return out;
}

/// The training-time augmentation family: `count` variants covering every
/// rotation step, with random flips and RGB-only photometric jitter.
inline std::vector<PairedSample> augment_pair(const PairedSample& sample, std::uint64_t seed,
                                              int count = 32) {
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> ub(0.75, 1.3);
  std::uniform_real_distribution<double> uc(0.8, 1.25);
  std::uniform_real_distribution<double> uh(-0.5, 0.5);
  std::vector<PairedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ColorJitter j;
    j.brightness = ub(rng);
    j.contrast = uc(rng);
    j.hue_shift = uh(rng);
    out.push_back(transform_pair(sample, i, coin(rng), j));
  }
  return out;
}

/// D -> D': keep only pairs whose source scene was entirely opaque.
inline std::vector<PairedSample> filter_opaque(const std::vector<PairedSample>& dataset) {
  std::vector<PairedSample> out;
  for (const PairedSample& s : dataset) {
    if (s.opaque_only) out.push_back(s);
  }
  return out;
}

}  // namespace xgrasp
