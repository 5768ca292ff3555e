#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/network.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/rng.hpp"
#include "xgrasp/teacher.hpp"
#include "xgrasp/train.hpp"

namespace xgrasp {

enum class PolicyKind { DepthOnly, RgbStudent, RgbdStudent, LateFusion, Custom };

inline const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::DepthOnly:
      return "depth";
    case PolicyKind::RgbStudent:
      return "rgb-st";
    case PolicyKind::RgbdStudent:
      return "rgbd-st";
    case PolicyKind::LateFusion:
      return "rgbd-m";
    case PolicyKind::Custom:
      return "custom";
  }
  return "?";
}

/// One of the four evaluated graspers. DepthOnly reads the teacher on the
/// observed depth; the students read rendered images; late fusion averages
/// the depth scorer with the RGB student.
struct Policy {
  PolicyKind kind = PolicyKind::DepthOnly;
  TeacherOracle teacher;                              // DepthOnly / LateFusion
  const NetworkParams* rgb_student = nullptr;         // RgbStudent / LateFusion
  const NetworkParams* rgbd_student = nullptr;        // RgbdStudent
  double resolution = 0.01;
  // test/debug hook: replaces the scorer entirely (kind == Custom)
  std::function<ScoreVolume(const PairedSample&)> custom;

  static Policy custom_scorer(std::function<ScoreVolume(const PairedSample&)> fn,
                              const TeacherOracle& t = {}) {
    Policy p;
    p.kind = PolicyKind::Custom;
    p.custom = std::move(fn);
    p.teacher = t;
    return p;
  }

  static Policy depth_only(const TeacherOracle& t, double resolution = 0.01) {
    Policy p;
    p.kind = PolicyKind::DepthOnly;
    p.teacher = t;
    p.resolution = resolution;
    return p;
  }
  static Policy rgb(const NetworkParams& net, const TeacherOracle& t, double resolution = 0.01) {
    Policy p;
    p.kind = PolicyKind::RgbStudent;
    p.rgb_student = &net;
    p.teacher = t;
    p.resolution = resolution;
    return p;
  }
  static Policy rgbd(const NetworkParams& net, const TeacherOracle& t, double resolution = 0.01) {
    Policy p;
    p.kind = PolicyKind::RgbdStudent;
    p.rgbd_student = &net;
    p.teacher = t;
    p.resolution = resolution;
    return p;
  }
  static Policy late_fusion(const NetworkParams& rgb_net, const TeacherOracle& t,
                            double resolution = 0.01) {
    Policy p;
    p.kind = PolicyKind::LateFusion;
    p.rgb_student = &rgb_net;
    p.teacher = t;
    p.resolution = resolution;
    return p;
  }
};

/// Elementwise arithmetic mean of two score volumes (late fusion).
inline ScoreVolume fuse_late(const ScoreVolume& vol_depth, const ScoreVolume& vol_rgb) {
  require_same_shape(vol_depth.scores, vol_rgb.scores, "fuse_late");
  if (vol_depth.cell_stride != vol_rgb.cell_stride) {
    throw DimensionError("fuse_late: mismatched cell strides");
  }
  ScoreVolume out = vol_rgb;
  out.modality = "late-fusion";
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    out.scores[i] = 0.5 * (vol_depth.scores[i] + vol_rgb.scores[i]);
  }
  return out;
}

/// Dense scores for one observation under a policy, always on the student's
/// stride-4 grid (the teacher volume is reduced and pooled to match).
inline ScoreVolume score_scene(const Policy& policy, const PairedSample& sample) {
  // center subsampling, not max-pooling: the grid entry must be the score of
  // the grasp that executing this cell actually runs
  auto teacher_grid = [&]() {
    return subsample_volume(
        max_over_z(score_dense(policy.teacher, sample.depth, policy.resolution)), 4);
  };
  switch (policy.kind) {
    case PolicyKind::Custom:
      if (!policy.custom) throw ContractError("custom policy has no scorer");
      return policy.custom(sample);
    case PolicyKind::DepthOnly:
      return teacher_grid();
    case PolicyKind::RgbStudent: {
      if (!policy.rgb_student) throw ContractError("rgb-st policy has no student network");
      return forward_dense(*policy.rgb_student,
                           student_input(sample, Modality::Rgb, policy.teacher.camera_height));
    }
    case PolicyKind::RgbdStudent: {
      if (!policy.rgbd_student) throw ContractError("rgbd-st policy has no student network");
      return forward_dense(*policy.rgbd_student,
                           student_input(sample, Modality::Rgbd, policy.teacher.camera_height));
    }
    case PolicyKind::LateFusion: {
      if (!policy.rgb_student) throw ContractError("rgbd-m policy has no rgb student");
      ScoreVolume rgb = forward_dense(
          *policy.rgb_student, student_input(sample, Modality::Rgb, policy.teacher.camera_height));
      return fuse_late(teacher_grid(), rgb);
    }
  }
  throw ContractError("unknown policy kind");
}

/// Highest-scoring grasp; ties break to the smallest (theta, y, x). The
/// returned coordinates are input pixels (cell centers).
inline GraspCandidate select_argmax(const ScoreVolume& vol) {
  if (vol.scores.size() == 0) throw ContractError("select_argmax on empty volume");
  const int t = vol.scores.dim(0), h = vol.scores.dim(1), w = vol.scores.dim(2);
  double best = -1.0;
  int bt = 0, by = 0, bx = 0;
  for (int tb = 0; tb < t; ++tb) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (vol.scores.at3(tb, y, x) > best) {
          best = vol.scores.at3(tb, y, x);
          bt = tb;
          by = y;
          bx = x;
        }
      }
    }
  }
  GraspCandidate q;
  q.theta_bin = bt;
  q.x = vol.pixel_of_cell(bx);
  q.y = vol.pixel_of_cell(by);
  return q;
}

inline double score_at(const ScoreVolume& vol, const GraspCandidate& q) {
  return vol.scores.at3(q.theta_bin, vol.cell_of_pixel(q.y), vol.cell_of_pixel(q.x));
}

/// Random-crop grasp sampling. A square crop is drawn uniformly; if its best
/// score clears the threshold the in-crop argmax is returned, otherwise a
/// new crop is sampled, at most max_resamples times.
struct CropSamplerConfig {
  double crop_size = 0.2;       // meters
  double score_threshold = 0.4;
  int max_resamples = 20;
};

/// NoValidCrop is a value, not a fault: an empty grasp plus the number of
/// crops that were sampled. The accepted crop (cell coordinates) is kept so
/// callers can audit the in-crop argmax.
struct CropSelection {
  std::optional<GraspCandidate> grasp;
  int attempts = 0;
  int crop_y = 0, crop_x = 0, crop_cells = 0;
};

inline CropSelection select_cropped(const ScoreVolume& vol, const CropSamplerConfig& cfg,
                                    double resolution, std::uint64_t seed) {
  if (cfg.crop_size <= 0.0) throw ContractError("crop size must be > 0");
  if (cfg.score_threshold < 0.0 || cfg.score_threshold > 1.0) {
    throw ContractError("crop threshold must be in [0,1]");
  }
  const int h = vol.scores.dim(1), w = vol.scores.dim(2);
  const double cell_meters = resolution * vol.cell_stride;
  int crop = static_cast<int>(std::lround(cfg.crop_size / cell_meters));
  crop = std::clamp(crop, 1, std::min(h, w));

  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> oy_pick(0, h - crop);
  std::uniform_int_distribution<int> ox_pick(0, w - crop);

  CropSelection result;
  result.crop_cells = crop;
  for (int attempt = 0; attempt < cfg.max_resamples; ++attempt) {
    ++result.attempts;
    const int oy = oy_pick(rng), ox = ox_pick(rng);
    double best = -1.0;
    int bt = 0, by = 0, bx = 0;
    for (int tb = 0; tb < vol.scores.dim(0); ++tb) {
      for (int y = oy; y < oy + crop; ++y) {
        for (int x = ox; x < ox + crop; ++x) {
          if (vol.scores.at3(tb, y, x) > best) {
            best = vol.scores.at3(tb, y, x);
            bt = tb;
            by = y;
            bx = x;
          }
        }
      }
    }
    if (best >= cfg.score_threshold) {
      GraspCandidate q;
      q.theta_bin = bt;
      q.x = vol.pixel_of_cell(bx);
      q.y = vol.pixel_of_cell(by);
      result.grasp = q;
      result.crop_y = oy;
      result.crop_x = ox;
      return result;
    }
  }
  return result;  // NoValidCrop
}

}  // namespace xgrasp
