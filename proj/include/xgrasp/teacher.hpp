#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

/// Parallel-jaw gripper. The finger footprint is finger_depth (along the
/// closing axis) by finger_width (across it); jaws start stroke_width apart.
struct GripperModel {
  double stroke_width = 0.05;     // max opening, meters
  double finger_depth = 0.01;     // pad extent along the closing axis
  double finger_width = 0.04;     // pad extent across the closing axis
  double contact_margin = 0.004;  // descend standoff above first contact
};

/// A grasp q = (x, y, theta[, z]): pixel coordinates, orientation bin over
/// [0, pi) (parallel-jaw symmetry), and an optional grasp-height bin.
struct GraspCandidate {
  int x = 0;
  int y = 0;
  int theta_bin = 0;
  std::optional<int> z_bin;
};

/// Dense grasp scores over (theta, y, x), values in [0,1]. cell_stride maps
/// score cells back to input pixels (grasp point = cell center).
struct ScoreVolume {
  Tensor scores;  // [theta_bins, H, W]
  std::string modality;
  int theta_bins = kThetaBins;
  int cell_stride = 1;

  int grid_h() const { return scores.dim(1); }
  int grid_w() const { return scores.dim(2); }

  // cell -> input pixel (cell center)
  int pixel_of_cell(int c) const { return c * cell_stride + cell_stride / 2; }
  int cell_of_pixel(int p) const { return p / cell_stride; }
};

/// Dense grasp scores over (z, theta, y, x) with the z grid in meters.
struct ScoreVolume4D {
  Tensor scores;  // [Z, theta_bins, H, W]
  std::vector<double> z_heights;
  std::string modality;
  int theta_bins = kThetaBins;
};

// Pixel-center offsets swept by a grasp at one orientation bin.
struct GraspFootprint {
  std::vector<std::pair<int, int>> finger_cells;   // (dy,dx), both pads
  std::vector<std::pair<int, int>> between_cells;  // strictly between the pads
  std::vector<double> between_s;                   // between-cell offsets along the closing axis
  double ux = 1.0, uy = 0.0;                       // closing-axis direction
};

inline double theta_of_bin(int theta_bin) { return theta_bin * kThetaBinWidth; }

inline GraspFootprint grasp_footprint(const GripperModel& g, double resolution, int theta_bin) {
  GraspFootprint f;
  const double theta = theta_of_bin(theta_bin);
  f.ux = std::cos(theta);
  f.uy = std::sin(theta);
  // snap axis-aligned directions so quarter-turn bins share exact cell sets
  auto snap = [](double v) {
    for (double target : {-1.0, 0.0, 1.0}) {
      if (std::abs(v - target) < 1e-12) return target;
    }
    return v;
  };
  f.ux = snap(f.ux);
  f.uy = snap(f.uy);
  const double half_stroke = 0.5 * g.stroke_width;
  const double reach = half_stroke + g.finger_depth;
  const int r = static_cast<int>(std::ceil(reach / resolution)) + 1;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double sx = dx * resolution, sy = dy * resolution;
      const double s = sx * f.ux + sy * f.uy;    // along closing axis
      const double t = -sx * f.uy + sy * f.ux;   // across it
      if (std::abs(t) > 0.5 * g.finger_width) continue;
      const double as = std::abs(s);
      if (as < half_stroke) {
        f.between_cells.emplace_back(dy, dx);
        f.between_s.push_back(s);
      } else if (as <= half_stroke + g.finger_depth) {
        f.finger_cells.emplace_back(dy, dx);
      }
    }
  }
  return f;
}

/// Analytic stand-in for a pretrained dense depth-based grasp scorer.
/// Scores are sigmoid-smoothed clearance and contact margins so downstream
/// distillation targets carry gradient-friendly structure.
struct TeacherOracle {
  GripperModel gripper;
  double camera_height = kDefaultCameraHeight;
  int z_bins = 8;
  double margin_sharpness = 200.0;  // 1/m

  double sig(double margin) const { return 1.0 / (1.0 + std::exp(-margin_sharpness * margin)); }
};

// Grasp heights: Z values uniform over (0, 0.9*maxObservedHeight], floored
// so an empty image still yields a usable (low) grid.
inline std::vector<double> teacher_z_heights(const Tensor& height, int z_bins) {
  if (z_bins < 1) throw ContractError("z_bins must be >= 1");
  double max_h = 0.0;
  for (std::size_t i = 0; i < height.size(); ++i) max_h = std::max(max_h, height[i]);
  const double top = 0.9 * std::max(max_h, 0.02);
  std::vector<double> zs(static_cast<std::size_t>(z_bins));
  for (int j = 0; j < z_bins; ++j) zs[static_cast<std::size_t>(j)] = top * (j + 1) / z_bins;
  return zs;
}

namespace detail {

// Clearance/contact maxima for one grasp; border cells count as table when
// clamp_borders is set, otherwise the footprint must be fully inside.
inline std::pair<double, double> grasp_maxima(const Tensor& height, int h, int w, int x, int y,
                                              const GraspFootprint& f, bool clamp_borders) {
  double max_under = 0.0, max_between = 0.0;
  for (const auto& [dy, dx] : f.finger_cells) {
    const int py = y + dy, px = x + dx;
    if (py < 0 || py >= h || px < 0 || px >= w) {
      if (!clamp_borders) throw ContractError("grasp finger footprint leaves the image");
      continue;
    }
    max_under = std::max(max_under, height[static_cast<std::size_t>(py) * w + px]);
  }
  for (const auto& [dy, dx] : f.between_cells) {
    const int py = y + dy, px = x + dx;
    if (py < 0 || py >= h || px < 0 || px >= w) {
      if (!clamp_borders) throw ContractError("grasp footprint leaves the image");
      continue;
    }
    max_between = std::max(max_between, height[static_cast<std::size_t>(py) * w + px]);
  }
  return {max_under, max_between};
}

}  // namespace detail

/// Score of one grasp at an explicit height: sigma(alpha*clearance) *
/// sigma(alpha*contact'), clearance = z - max height under the fingers,
/// contact' = max height strictly between them - z.
inline double score_grasp_at_height(const TeacherOracle& oracle, const Tensor& depth, int x,
                                    int y, int theta_bin, double z_height,
                                    double resolution = 0.01) {
  const int h = depth.dim(1), w = depth.dim(2);
  if (x < 0 || x >= w || y < 0 || y >= h || theta_bin < 0 || theta_bin >= kThetaBins) {
    throw ContractError("grasp candidate out of bounds");
  }
  const Tensor height = observed_height(depth, oracle.camera_height);
  const GraspFootprint f = grasp_footprint(oracle.gripper, resolution, theta_bin);
  const auto [max_under, max_between] =
      detail::grasp_maxima(height, h, w, x, y, f, /*clamp_borders=*/false);
  return oracle.sig(z_height - max_under) * oracle.sig(max_between - z_height);
}

inline double score_grasp(const TeacherOracle& oracle, const Tensor& depth,
                          const GraspCandidate& q, double resolution = 0.01) {
  if (!q.z_bin.has_value()) throw ContractError("depth-modality grasp needs a z bin");
  const Tensor height = observed_height(depth, oracle.camera_height);
  const std::vector<double> zs = teacher_z_heights(height, oracle.z_bins);
  if (*q.z_bin < 0 || *q.z_bin >= oracle.z_bins) throw ContractError("z bin out of range");
  return score_grasp_at_height(oracle, depth, q.x, q.y, q.theta_bin,
                               zs[static_cast<std::size_t>(*q.z_bin)], resolution);
}

/// Dense teacher scores at every (z, theta, y, x). The clearance/contact
/// maxima are independent of z, so they are gathered once per (theta,y,x).
/// Grasps near the border treat out-of-image cells as table.
inline ScoreVolume4D score_dense(const TeacherOracle& oracle, const Tensor& depth,
                                 double resolution = 0.01) {
  if (depth.rank() != 3 || depth.dim(0) != 1) throw DimensionError("depth must be [1,H,W]");
  const int h = depth.dim(1), w = depth.dim(2);
  const Tensor height = observed_height(depth, oracle.camera_height);
  const std::vector<double> zs = teacher_z_heights(height, oracle.z_bins);

  ScoreVolume4D vol;
  vol.z_heights = zs;
  vol.modality = "depth-teacher";
  vol.scores = Tensor::zeros({oracle.z_bins, kThetaBins, h, w});

  std::vector<double> max_under(static_cast<std::size_t>(h) * w);
  std::vector<double> max_between(static_cast<std::size_t>(h) * w);
  for (int tb = 0; tb < kThetaBins; ++tb) {
    const GraspFootprint f = grasp_footprint(oracle.gripper, resolution, tb);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto [mu, mb] = detail::grasp_maxima(height, h, w, x, y, f, /*clamp_borders=*/true);
        max_under[static_cast<std::size_t>(y) * w + x] = mu;
        max_between[static_cast<std::size_t>(y) * w + x] = mb;
      }
    }
    for (int zi = 0; zi < oracle.z_bins; ++zi) {
      const double z = zs[static_cast<std::size_t>(zi)];
      double* out = vol.scores.data() +
                    ((static_cast<std::size_t>(zi) * kThetaBins + tb) * h) * static_cast<std::size_t>(w);
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
        out[i] = oracle.sig(z - max_under[i]) * oracle.sig(max_between[i] - z);
      }
    }
  }
  return vol;
}

/// out[theta,y,x] = max over z of in[z,theta,y,x].
inline ScoreVolume max_over_z(const ScoreVolume4D& vol) {
  const int z = vol.scores.dim(0), t = vol.scores.dim(1);
  const int h = vol.scores.dim(2), w = vol.scores.dim(3);
  ScoreVolume out;
  out.modality = vol.modality;
  out.theta_bins = t;
  out.scores = Tensor::zeros({t, h, w});
  const std::size_t plane = static_cast<std::size_t>(t) * h * w;
  for (int zi = 0; zi < z; ++zi) {
    const double* src = vol.scores.data() + zi * plane;
    for (std::size_t i = 0; i < plane; ++i) out.scores[i] = std::max(out.scores[i], src[i]);
  }
  return out;
}

/// Subsample a per-pixel volume onto a coarser grid at the cell centers:
/// out[theta,cy,cx] = in[theta, cell*cy + cell/2, cell*cx + cell/2]. A cell's
/// score is then exactly the score of the grasp that executing the cell runs.
inline ScoreVolume subsample_volume(const ScoreVolume& vol, int cell) {
  if (cell < 1) throw ContractError("subsample cell must be >= 1");
  if (cell == 1) return vol;
  const int t = vol.scores.dim(0), h = vol.scores.dim(1), w = vol.scores.dim(2);
  if (h % cell != 0 || w % cell != 0) {
    throw DimensionError("volume grid is not a multiple of the subsampled grid");
  }
  ScoreVolume out;
  out.modality = vol.modality;
  out.theta_bins = vol.theta_bins;
  out.cell_stride = vol.cell_stride * cell;
  out.scores = Tensor::zeros({t, h / cell, w / cell});
  for (int tb = 0; tb < t; ++tb) {
    for (int oy = 0; oy < h / cell; ++oy) {
      for (int ox = 0; ox < w / cell; ++ox) {
        out.scores.at3(tb, oy, ox) = vol.scores.at3(tb, oy * cell + cell / 2, ox * cell + cell / 2);
      }
    }
  }
  return out;
}

/// Spatial max-pool of a score volume by `cell` (e.g. onto the student's
/// stride-4 grid); a pooled cell's score is the best grasp it covers.
inline ScoreVolume maxpool_volume(const ScoreVolume& vol, int cell) {
  if (cell < 1) throw ContractError("pool cell must be >= 1");
  if (cell == 1) return vol;
  const int t = vol.scores.dim(0), h = vol.scores.dim(1), w = vol.scores.dim(2);
  if (h % cell != 0 || w % cell != 0) {
    throw DimensionError("volume grid is not a multiple of the pooled grid");
  }
  ScoreVolume out;
  out.modality = vol.modality;
  out.theta_bins = vol.theta_bins;
  out.cell_stride = vol.cell_stride * cell;
  out.scores = Tensor::zeros({t, h / cell, w / cell});
  for (int tb = 0; tb < t; ++tb) {
    for (int oy = 0; oy < h / cell; ++oy) {
      for (int ox = 0; ox < w / cell; ++ox) {
        double best = 0.0;
        for (int dy = 0; dy < cell; ++dy) {
          for (int dx = 0; dx < cell; ++dx) {
            best = std::max(best, vol.scores.at3(tb, oy * cell + dy, ox * cell + dx));
          }
        }
        out.scores.at3(tb, oy, ox) = best;
      }
    }
  }
  return out;
}

}  // namespace xgrasp
