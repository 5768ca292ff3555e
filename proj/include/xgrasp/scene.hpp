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
#include "xgrasp/tensor.hpp"

namespace xgrasp {

enum class MaterialClass { Opaque, Transparent, Specular };

inline const char* material_name(MaterialClass m) {
  switch (m) {
    case MaterialClass::Opaque:
      return "opaque";
    case MaterialClass::Transparent:
      return "transparent";
    case MaterialClass::Specular:
      return "specular";
  }
  return "?";
}

struct RgbColor {
  double r = 0.0, g = 0.0, b = 0.0;
  double intensity() const { return (r + g + b) / 3.0; }
};

enum class ShapeKind { Box, Cylinder, Ridge };

// Raster-friendly extruded primitive. dim_x/dim_y are footprint extents in
// the object frame; a Ridge is a tent profile along the x extent.
struct SceneObject {
  ShapeKind shape = ShapeKind::Box;
  double x = 0.0, y = 0.0;  // footprint center, meters
  double rotation = 0.0;    // radians about the vertical axis
  double dim_x = 0.04;
  double dim_y = 0.04;
  double height = 0.05;
  MaterialClass material = MaterialClass::Opaque;
  RgbColor albedo{0.6, 0.6, 0.6};

  double bounding_radius() const { return 0.5 * std::hypot(dim_x, dim_y); }

  // Height of the object's surface at object-frame offset (u, v);
  // negative means outside the footprint. Footprints are half-open
  // ([-d/2, d/2)) so rasterized pixel area matches footprint/resolution^2.
  double surface_height(double u, double v) const {
    const double hx = 0.5 * dim_x, hy = 0.5 * dim_y;
    switch (shape) {
      case ShapeKind::Box:
        return (u >= -hx && u < hx && v >= -hy && v < hy) ? height : -1.0;
      case ShapeKind::Cylinder: {
        const double e = (u / hx) * (u / hx) + (v / hy) * (v / hy);
        return e < 1.0 ? height : -1.0;
      }
      case ShapeKind::Ridge: {
        if (!(u >= -hx && u < hx && v >= -hy && v < hy)) return -1.0;
        return height * (1.0 - std::abs(u) / hx);
      }
    }
    return -1.0;
  }
};

constexpr double kMaxObjectHeight = 0.15;  // meters

struct SceneSpec {
  double workspace_x = 0.32;  // meters
  double workspace_y = 0.32;
  double resolution = 0.01;  // meters/pixel
  RgbColor table_color{0.45, 0.42, 0.40};
  std::vector<SceneObject> objects;

  int width() const { return static_cast<int>(std::lround(workspace_x / resolution)); }
  int height() const { return static_cast<int>(std::lround(workspace_y / resolution)); }

  void validate() const {
    if (resolution <= 0.0) throw ValidationError("resolution must be > 0");
    if (workspace_x <= 0.0 || workspace_y <= 0.0) throw ValidationError("workspace must be > 0");
    for (const SceneObject& o : objects) {
      if (o.dim_x <= 0.0 || o.dim_y <= 0.0) throw ValidationError("object footprint must be > 0");
      if (!(o.height > 0.0) || o.height > kMaxObjectHeight) {
        throw ValidationError("object height must be in (0, 0.15] m");
      }
      const double r = o.bounding_radius();
      if (o.x - r < 0.0 || o.x + r > workspace_x || o.y - r < 0.0 || o.y + r > workspace_y) {
        throw ValidationError("object footprint leaves the workspace");
      }
    }
  }

  bool all_opaque() const {
    return std::all_of(objects.begin(), objects.end(),
                       [](const SceneObject& o) { return o.material == MaterialClass::Opaque; });
  }
};

/// Ground-truth scene: per-pixel height, material, albedo and object id.
/// The simulator's source of truth; policies never see it.
struct Scene {
  SceneSpec spec;
  std::vector<SceneObject> objects;  // stable ids = index
  std::vector<bool> alive;
  Tensor heightmap;                        // [H,W], meters above table
  std::vector<MaterialClass> material;     // H*W, Opaque for table
  std::vector<RgbColor> albedo;            // H*W
  std::vector<int> object_id;              // H*W, -1 for table

  int width() const { return heightmap.dim(1); }
  int height() const { return heightmap.dim(0); }

  int alive_count() const {
    int n = 0;
    for (bool a : alive) n += a ? 1 : 0;
    return n;
  }

  double height_at(int py, int px) const { return heightmap[static_cast<std::size_t>(py) * width() + px]; }

  void remove_object(int id) {
    if (id < 0 || id >= static_cast<int>(objects.size())) {
      throw ContractError("remove_object: bad object id");
    }
    alive[static_cast<std::size_t>(id)] = false;
    rasterize();
  }

  void rasterize() {
    const int w = spec.width();
    const int h = spec.height();
    heightmap = Tensor::zeros({h, w});
    material.assign(static_cast<std::size_t>(h) * w, MaterialClass::Opaque);
    albedo.assign(static_cast<std::size_t>(h) * w, spec.table_color);
    object_id.assign(static_cast<std::size_t>(h) * w, -1);
    for (int py = 0; py < h; ++py) {
      const double wy = (py + 0.5) * spec.resolution;
      for (int px = 0; px < w; ++px) {
        const double wx = (px + 0.5) * spec.resolution;
        const std::size_t idx = static_cast<std::size_t>(py) * w + px;
        double best = 0.0;
        int best_id = -1;
        for (std::size_t oi = 0; oi < objects.size(); ++oi) {
          if (!alive[oi]) continue;
          const SceneObject& o = objects[oi];
          const double dx = wx - o.x, dy = wy - o.y;
          const double c = std::cos(-o.rotation), s = std::sin(-o.rotation);
          const double u = c * dx - s * dy;
          const double v = s * dx + c * dy;
          const double sh = o.surface_height(u, v);
          // overlap policy: per-pixel max composite
          if (sh > best) {
            best = sh;
            best_id = static_cast<int>(oi);
          }
        }
        heightmap[idx] = best;
        if (best_id >= 0) {
          material[idx] = objects[static_cast<std::size_t>(best_id)].material;
          albedo[idx] = objects[static_cast<std::size_t>(best_id)].albedo;
          object_id[idx] = best_id;
        }
      }
    }
  }
};

/// Deterministic rasterization of a validated spec.
inline Scene generate_scene(const SceneSpec& spec, std::uint64_t /*seed*/ = 0) {
  spec.validate();
  Scene scene;
  scene.spec = spec;
  scene.objects = spec.objects;
  scene.alive.assign(spec.objects.size(), true);
  scene.rasterize();
  return scene;
}

// ---------------------------------------------------------------------------
// Random object/scene samplers shared by dataset generation and evaluation.
// Graspable dimensions are kept at or below 0.022 m so a 0.05 m stroke leaves
// slack for grasp centers quantized to the prediction grid.

inline RgbColor hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

inline RgbColor sample_albedo(Rng& rng) {
  std::uniform_real_distribution<double> uh(0.0, 1.0);
  std::uniform_real_distribution<double> us(0.25, 0.9);
  std::uniform_real_distribution<double> uv(0.35, 0.95);
  return hsv_to_rgb(uh(rng), us(rng), uv(rng));
}

inline SceneObject sample_object(Rng& rng, MaterialClass material) {
  std::uniform_int_distribution<int> shape_pick(0, 2);
  std::uniform_real_distribution<double> grasp_dim(0.016, 0.022);
  std::uniform_real_distribution<double> ridge_dim(0.02, 0.032);
  std::uniform_real_distribution<double> long_dim(0.05, 0.10);
  std::uniform_real_distribution<double> obj_height(0.03, 0.09);
  std::uniform_real_distribution<double> rot(0.0, 2.0 * std::numbers::pi);

  SceneObject o;
  o.material = material;
  o.albedo = sample_albedo(rng);
  o.rotation = rot(rng);
  o.height = obj_height(rng);
  switch (shape_pick(rng)) {
    case 0:
      o.shape = ShapeKind::Box;
      o.dim_x = grasp_dim(rng);
      o.dim_y = long_dim(rng);
      break;
    case 1:
      o.shape = ShapeKind::Cylinder;
      o.dim_x = o.dim_y = grasp_dim(rng);
      break;
    default:
      o.shape = ShapeKind::Ridge;
      o.dim_x = ridge_dim(rng);
      o.dim_y = long_dim(rng);
      break;
  }
  return o;
}

// Uniform pose inside the workspace, rejection-sampled against existing
// object centers; after max_tries the best-so-far position is kept so the
// sampler stays total and deterministic.
inline void place_object(SceneObject& o, const SceneSpec& spec, Rng& rng,
                         double min_center_dist = 0.0) {
  const double margin = o.bounding_radius() + 0.015;
  std::uniform_real_distribution<double> ux(margin, spec.workspace_x - margin);
  std::uniform_real_distribution<double> uy(margin, spec.workspace_y - margin);
  double best_x = 0, best_y = 0, best_d = -1.0;
  const int max_tries = 200;
  for (int t = 0; t < max_tries; ++t) {
    const double cx = ux(rng), cy = uy(rng);
    double nearest = 1e9;
    for (const SceneObject& other : spec.objects) {
      nearest = std::min(nearest, std::hypot(cx - other.x, cy - other.y));
    }
    if (nearest > best_d) {
      best_d = nearest;
      best_x = cx;
      best_y = cy;
    }
    if (nearest >= min_center_dist) break;
  }
  o.x = best_x;
  o.y = best_y;
}

inline SceneSpec sample_scene_spec(Rng& rng, const std::vector<MaterialClass>& materials,
                                   double workspace = 0.32, double min_center_dist = 0.085) {
  SceneSpec spec;
  spec.workspace_x = spec.workspace_y = workspace;
  for (MaterialClass m : materials) {
    SceneObject o = sample_object(rng, m);
    place_object(o, spec, rng, min_center_dist);
    spec.objects.push_back(o);
  }
  return spec;
}

}  // namespace xgrasp
