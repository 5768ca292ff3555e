#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xgrasp/errors.hpp"
#include "xgrasp/fusion.hpp"
#include "xgrasp/image_io.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/scene.hpp"
#include "xgrasp/teacher.hpp"

namespace xgrasp {

// Ground-truth side of the harness. Everything here reads the Scene and
// never a rendered image; policies get exactly the opposite deal.

/// Process-wide count of ground-truth executions; lets tests assert that
/// training never consulted the success oracle.
inline std::atomic<long long>& grasp_execution_count() {
  static std::atomic<long long> count{0};
  return count;
}

struct GraspExecution {
  bool success = false;
  int object_id = -1;  // removed object on success
  double grasp_height = 0.0;
};

/// Descend-and-close on the true heightmap: the jaws stop one contact margin
/// above the tallest material under the finger pads, then close. Success
/// needs material between the fingers above that height, a closing-axis
/// extent within the stroke, and clearance for the pads. The topmost
/// contacted object is removed from the scene.
inline GraspExecution execute_grasp(Scene& scene, const GraspCandidate& q,
                                    const GripperModel& gripper) {
  grasp_execution_count().fetch_add(1, std::memory_order_relaxed);
  const int h = scene.height(), w = scene.width();
  if (q.x < 0 || q.x >= w || q.y < 0 || q.y >= h || q.theta_bin < 0 || q.theta_bin >= kThetaBins) {
    throw ContractError("grasp out of bounds");
  }
  const double res = scene.spec.resolution;
  const GraspFootprint f = grasp_footprint(gripper, res, q.theta_bin);

  double max_under = 0.0;
  for (const auto& [dy, dx] : f.finger_cells) {
    const int py = q.y + dy, px = q.x + dx;
    if (py < 0 || py >= h || px < 0 || px >= w) continue;  // off-table: nothing to hit
    max_under = std::max(max_under, scene.height_at(py, px));
  }
  const double z_star = max_under + gripper.contact_margin;

  GraspExecution out;
  out.grasp_height = z_star;

  double s_min = 1e9, s_max = -1e9;
  double top_height = -1.0;
  int top_id = -1;
  for (std::size_t i = 0; i < f.between_cells.size(); ++i) {
    const auto& [dy, dx] = f.between_cells[i];
    const int py = q.y + dy, px = q.x + dx;
    if (py < 0 || py >= h || px < 0 || px >= w) continue;
    const double hh = scene.height_at(py, px);
    if (hh <= z_star) continue;
    s_min = std::min(s_min, f.between_s[i]);
    s_max = std::max(s_max, f.between_s[i]);
    if (hh > top_height) {
      top_height = hh;
      top_id = scene.object_id[static_cast<std::size_t>(py) * w + px];
    }
  }

  if (top_id < 0) return out;                                 // nothing to close on
  if (s_max - s_min + res > gripper.stroke_width) return out; // does not fit the jaws
  if (max_under >= z_star) return out;                        // pads inside material

  out.success = true;
  out.object_id = top_id;
  scene.remove_object(top_id);
  return out;
}

// ---------------------------------------------------------------------------
// Isolated-object protocol: each trial re-poses each object alone on the
// table, one grasp per object, argmax selection.

struct EvalRenderConfig {
  double workspace = 0.32;
  double resolution = 0.01;
  double illum = 1.0;
  DepthNoiseModel depth_noise;
  double rgb_noise_sigma = 0.01;
};

inline int material_index(MaterialClass m) { return static_cast<int>(m); }

/// Per-material success rates, mean +- sample stddev over trials.
struct SuccessStats {
  int trials = 0;
  std::array<std::vector<double>, 3> per_trial_rates;  // by material index

  bool has(MaterialClass m) const { return !per_trial_rates[material_index(m)].empty(); }
  double mean(MaterialClass m) const {
    const auto& r = per_trial_rates[material_index(m)];
    if (r.empty()) return 0.0;
    double s = 0.0;
    for (double v : r) s += v;
    return s / static_cast<double>(r.size());
  }
  double stddev(MaterialClass m) const {
    const auto& r = per_trial_rates[material_index(m)];
    if (r.size() < 2) return 0.0;
    const double mu = mean(m);
    double acc = 0.0;
    for (double v : r) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(r.size() - 1));
  }
};

inline SuccessStats run_isolated(const Policy& policy, const std::vector<SceneObject>& objects,
                                 int trials, std::uint64_t seed,
                                 const EvalRenderConfig& cfg = {}) {
  if (trials < 1) throw ContractError("trials must be >= 1");
  SuccessStats stats;
  stats.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
    std::array<int, 3> attempts{0, 0, 0};
    std::array<int, 3> successes{0, 0, 0};
    for (const SceneObject& proto : objects) {
      SceneSpec spec;
      spec.workspace_x = spec.workspace_y = cfg.workspace;
      spec.resolution = cfg.resolution;
      SceneObject obj = proto;
      std::uniform_real_distribution<double> rot(0.0, 2.0 * std::numbers::pi);
      obj.rotation = rot(rng);
      place_object(obj, spec, rng);
      spec.objects.push_back(obj);

      Scene scene = generate_scene(spec, 0);
      const std::uint64_t render_seed = rng();
      PairedSample sample = render_pair(scene, policy.teacher.camera_height, cfg.illum,
                                        render_seed, cfg.depth_noise, cfg.rgb_noise_sigma);
      const GraspCandidate q = select_argmax(score_scene(policy, sample));
      const GraspExecution exec = execute_grasp(scene, q, policy.teacher.gripper);
      const int mi = material_index(proto.material);
      ++attempts[static_cast<std::size_t>(mi)];
      if (exec.success) ++successes[static_cast<std::size_t>(mi)];
    }
    for (int mi = 0; mi < 3; ++mi) {
      if (attempts[static_cast<std::size_t>(mi)] > 0) {
        stats.per_trial_rates[static_cast<std::size_t>(mi)].push_back(
            static_cast<double>(successes[static_cast<std::size_t>(mi)]) /
            attempts[static_cast<std::size_t>(mi)]);
      }
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Clutter protocol: grasp until everything is cleared, three consecutive
// attempts fail, or objects leave the workspace (unreachable in this static
// simulation, kept for protocol completeness).

enum class TerminationReason {
  AllGrasped,
  ThreeConsecutiveFailures,
  ObjectsOutOfWorkspace,
  NoValidCrop,  // every attempt declined by the crop sampler
};

inline const char* termination_name(TerminationReason r) {
  switch (r) {
    case TerminationReason::AllGrasped:
      return "AllGrasped";
    case TerminationReason::ThreeConsecutiveFailures:
      return "ThreeConsecutiveFailures";
    case TerminationReason::ObjectsOutOfWorkspace:
      return "ObjectsOutOfWorkspace";
    case TerminationReason::NoValidCrop:
      return "NoValidCrop";
  }
  return "?";
}

struct GraspAttempt {
  GraspCandidate grasp;
  bool success = false;
  bool no_valid_crop = false;  // declined selection, counted as a failure
  double policy_score = 0.0;
  int grasped_object = -1;
};

struct TrialResult {
  std::vector<GraspAttempt> attempts;
  TerminationReason termination = TerminationReason::AllGrasped;
  int objects_total = 0;
  int objects_grasped = 0;

  double success_rate() const {
    return objects_total > 0 ? static_cast<double>(objects_grasped) / objects_total : 0.0;
  }
};

inline TrialResult run_clutter(const Policy& policy, const SceneSpec& scene_spec,
                               const std::optional<CropSamplerConfig>& crop_cfg,
                               std::uint64_t seed, const EvalRenderConfig& cfg = {}) {
  if (scene_spec.objects.size() < 2) throw ContractError("clutter needs at least 2 objects");
  Scene scene = generate_scene(scene_spec, 0);
  TrialResult result;
  result.objects_total = static_cast<int>(scene_spec.objects.size());
  Rng rng = make_rng(seed);
  int consecutive_failures = 0;
  bool any_executed = false;

  while (true) {
    if (scene.alive_count() == 0) {
      result.termination = TerminationReason::AllGrasped;
      break;
    }
    const std::uint64_t render_seed = rng();
    PairedSample sample = render_pair(scene, policy.teacher.camera_height, cfg.illum, render_seed,
                                      cfg.depth_noise, cfg.rgb_noise_sigma);
    const ScoreVolume vol = score_scene(policy, sample);

    GraspAttempt attempt;
    std::optional<GraspCandidate> q;
    if (crop_cfg.has_value()) {
      const CropSelection sel = select_cropped(vol, *crop_cfg, scene_spec.resolution, rng());
      if (sel.grasp.has_value()) {
        q = sel.grasp;
      } else {
        attempt.no_valid_crop = true;
      }
    } else {
      q = select_argmax(vol);
    }

    if (q.has_value()) {
      any_executed = true;
      attempt.grasp = *q;
      attempt.policy_score = score_at(vol, *q);
      const GraspExecution exec = execute_grasp(scene, *q, policy.teacher.gripper);
      attempt.success = exec.success;
      attempt.grasped_object = exec.object_id;
      if (exec.success) ++result.objects_grasped;
    }
    result.attempts.push_back(attempt);

    if (attempt.success) {
      consecutive_failures = 0;
    } else {
      ++consecutive_failures;
      if (consecutive_failures >= 3) {
        result.termination = any_executed ? TerminationReason::ThreeConsecutiveFailures
                                          : TerminationReason::NoValidCrop;
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

/// 8-bit grayscale heatmap of one theta slice (or the max over theta),
/// nearest-neighbor upsampled to input resolution. Score 1 maps to 255,
/// halves round up.
inline constexpr int kThetaMax = -1;

inline void export_heatmap(const ScoreVolume& vol, int theta_bin,
                           const std::filesystem::path& path) {
  if (theta_bin != kThetaMax && (theta_bin < 0 || theta_bin >= vol.scores.dim(0))) {
    throw ContractError("theta bin out of range");
  }
  const int h = vol.scores.dim(1), w = vol.scores.dim(2);
  const int stride = vol.cell_stride;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * stride * w * stride);
  for (int py = 0; py < h * stride; ++py) {
    for (int px = 0; px < w * stride; ++px) {
      const int cy = py / stride, cx = px / stride;
      double v;
      if (theta_bin == kThetaMax) {
        v = 0.0;
        for (int tb = 0; tb < vol.scores.dim(0); ++tb) {
          v = std::max(v, vol.scores.at3(tb, cy, cx));
        }
      } else {
        v = vol.scores.at3(theta_bin, cy, cx);
      }
      pixels[static_cast<std::size_t>(py) * w * stride + px] = quantize8(v);
    }
  }
  write_pgm8(path, w * stride, h * stride, pixels);
}

}  // namespace xgrasp
