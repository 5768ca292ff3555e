#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "xgrasp/adam.hpp"
#include "xgrasp/autodiff.hpp"
#include "xgrasp/errors.hpp"
#include "xgrasp/network.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/rng.hpp"
#include "xgrasp/teacher.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

enum class Modality { Rgb, Rgbd };

enum class LossKind { Bce, Mse };

// How a teacher volume becomes a stride-4 training target. BlockMax marks a
// cell by the best grasp anywhere in its 4x4 block; CellCenter marks it by
// the grasp the cell's center actually executes. CellCenter matches the
// selection-time semantics and is the desk-scale default.
enum class TargetReduction { BlockMax, CellCenter };

struct TrainConfig {
  // training-recipe defaults: lr 1e-5, batch 64, 32 augmentations, BCE
  double learning_rate = 1e-5;
  int batch_size = 64;
  int augmentations_per_image = 32;
  LossKind loss = LossKind::Bce;
  TargetReduction target_reduction = TargetReduction::CellCenter;
  int max_steps = 2000;
  int validation_every = 100;
  std::uint64_t seed = 12345;
  int threads = 0;  // 0 = hardware concurrency
  // convergence: stop when validation fails to improve by early_stop_delta
  // over early_stop_patience consecutive validations
  double early_stop_delta = 1e-4;
  int early_stop_patience = 5;
};

struct TrainReport {
  std::vector<double> train_loss;                  // one entry per step
  std::vector<std::pair<int, double>> val_loss;    // (step, loss)
  int steps_run = 0;
  bool early_stopped = false;
};

struct TrainOutcome {
  NetworkParams params;
  TrainReport report;
};

/// Instrumentable dataset view. Metadata probes (count/opaque_only) are free;
/// sample() is the payload access that training must never issue for
/// non-opaque entries.
struct SampleSource {
  std::function<std::size_t()> count;
  std::function<bool(std::size_t)> opaque_only;
  std::function<const PairedSample&(std::size_t)> sample;

  static SampleSource from(const std::vector<PairedSample>& v) {
    SampleSource s;
    s.count = [&v] { return v.size(); };
    s.opaque_only = [&v](std::size_t i) { return v[i].opaque_only; };
    s.sample = [&v](std::size_t i) -> const PairedSample& { return v[i]; };
    return s;
  }
};

/// Distillation target: max over z, then spatial max-pool onto the student's
/// grid so a cell's target is the best grasp it covers.
inline ScoreVolume compute_targets(const ScoreVolume4D& teacher_vol, int cell = 4) {
  return maxpool_volume(max_over_z(teacher_vol), cell);
}

/// Scalar distillation loss between two score volumes.
inline double distill_loss(const ScoreVolume& predicted, const ScoreVolume& target,
                           LossKind kind) {
  require_same_shape(predicted.scores, target.scores, "distill_loss");
  const std::size_t n = predicted.scores.size();
  double acc = 0.0;
  if (kind == LossKind::Mse) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = predicted.scores[i] - target.scores[i];
      acc += d * d;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(predicted.scores[i], detail::kBceClamp, 1.0 - detail::kBceClamp);
      const double t = target.scores[i];
      acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
  }
  return acc / static_cast<double>(n);
}

/// Student input for a modality; the RGB student's input never includes a
/// depth channel, the RGB-D student gets observed height as channel 4.
inline Tensor student_input(const PairedSample& s, Modality modality, double camera_height) {
  if (modality == Modality::Rgb) return s.rgb;
  const int h = s.rgb.dim(1), w = s.rgb.dim(2);
  Tensor in = Tensor::zeros({4, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < 3 * plane; ++i) in[i] = s.rgb[i];
  const Tensor height = observed_height(s.depth, camera_height);
  for (std::size_t i = 0; i < plane; ++i) in[3 * plane + i] = height[i];
  return in;
}

using ValidationHook =
    std::function<void(int step, double val_loss, const NetworkParams& params)>;

namespace detail {

struct TrainItem {
  Tensor input;
  Tensor target;  // [16, H/4, W/4]
};

// Deterministic parallel map over [0, n): static output slots, any schedule.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace detail

/// Supervision transfer: distill the analytic depth teacher into an RGB or
/// RGB-D student on opaque-only pairs. Teacher targets are computed on each
/// augmented variant's depth channel and cached; the student never sees
/// grasp-success labels or non-opaque samples.
inline TrainOutcome train(const TrainConfig& cfg, const SampleSource& train_data,
                          const SampleSource& val_data, Modality modality,
                          const TeacherOracle& teacher, const ValidationHook& on_validation = {}) {
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");

  // D -> D': opaque-only filtering happens on metadata, so non-opaque
  // payloads are never touched.
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < train_data.count(); ++i) {
    if (train_data.opaque_only(i)) train_idx.push_back(i);
  }
  if (train_idx.empty()) throw ConfigError("no opaque training data");

  const int threads = cfg.threads > 0
                          ? cfg.threads
                          : std::max(1u, std::thread::hardware_concurrency());
  NetworkParams net = build_network(modality == Modality::Rgb ? 3 : 4, cfg.seed);

  TrainOutcome out;
  if (cfg.max_steps == 0) {
    out.params = std::move(net);
    return out;
  }

  auto make_target = [&](const Tensor& depth) {
    const ScoreVolume4D vol = score_dense(teacher, depth);
    if (cfg.target_reduction == TargetReduction::BlockMax) {
      return compute_targets(vol, 4).scores;
    }
    return subsample_volume(max_over_z(vol), 4).scores;
  };

  // Augmented training pool with cached teacher targets.
  std::vector<detail::TrainItem> pool(train_idx.size() *
                                      static_cast<std::size_t>(cfg.augmentations_per_image));
  detail::parallel_for(train_idx.size(), threads, [&](std::size_t i) {
    const PairedSample& base = train_data.sample(train_idx[i]);
    const std::vector<PairedSample> variants =
        augment_pair(base, sub_seed(cfg.seed, 1000 + train_idx[i]), cfg.augmentations_per_image);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      detail::TrainItem item;
      item.input = student_input(variants[v], modality, teacher.camera_height);
      item.target = make_target(variants[v].depth);
      pool[i * static_cast<std::size_t>(cfg.augmentations_per_image) + v] = std::move(item);
    }
  });

  // Fixed validation batch: the un-augmented opaque validation pairs.
  std::vector<detail::TrainItem> val_pool;
  for (std::size_t i = 0; i < val_data.count(); ++i) {
    if (!val_data.opaque_only(i)) continue;
    const PairedSample& s = val_data.sample(i);
    detail::TrainItem item;
    item.input = student_input(s, modality, teacher.camera_height);
    item.target = make_target(s.depth);
    val_pool.push_back(std::move(item));
  }

  std::vector<Tensor> params = net.flatten();
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam = AdamState::init(params, adam_cfg);

  auto validate = [&]() -> double {
    if (val_pool.empty()) return 0.0;
    std::vector<double> losses(val_pool.size());
    detail::parallel_for(val_pool.size(), threads, [&](std::size_t i) {
      Tensor pred = forward(net, val_pool[i].input);
      double acc = 0.0;
      for (std::size_t j = 0; j < pred.size(); ++j) {
        if (cfg.loss == LossKind::Mse) {
          const double d = pred[j] - val_pool[i].target[j];
          acc += d * d;
        } else {
          const double p = std::clamp(pred[j], detail::kBceClamp, 1.0 - detail::kBceClamp);
          const double t = val_pool[i].target[j];
          acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        }
      }
      losses[i] = acc / static_cast<double>(pred.size());
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(losses.size());
  };

  Rng batch_rng = make_rng(cfg.seed, 7);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

  double best_val = std::numeric_limits<double>::infinity();
  int stale_validations = 0;

  for (int step = 0; step < cfg.max_steps; ++step) {
    net.unflatten(params);

    std::vector<std::size_t> batch(static_cast<std::size_t>(cfg.batch_size));
    for (std::size_t& b : batch) b = pick(batch_rng);

    // Per-element losses/gradients; accumulation below is strictly by batch
    // index so results do not depend on the thread count.
    std::vector<double> elem_loss(batch.size());
    std::vector<std::vector<Tensor>> elem_grads(batch.size());
    detail::parallel_for(batch.size(), threads, [&](std::size_t bi) {
      const detail::TrainItem& item = pool[batch[bi]];
      Graph g;
      NetworkGraph ng = build_graph(g, net, item.input);
      const int loss_node = cfg.loss == LossKind::Mse ? g.mse_loss(ng.output, item.target)
                                                      : g.bce_loss(ng.output, item.target);
      elem_loss[bi] = g.value(loss_node)[0];
      std::vector<Tensor> grads = g.backward(loss_node);
      std::vector<Tensor> flat;
      flat.reserve(ng.kernel_nodes.size() * 2);
      for (std::size_t li = 0; li < ng.kernel_nodes.size(); ++li) {
        flat.push_back(std::move(grads[static_cast<std::size_t>(ng.kernel_nodes[li])]));
        flat.push_back(std::move(grads[static_cast<std::size_t>(ng.bias_nodes[li])]));
      }
      elem_grads[bi] = std::move(flat);
    });

    std::vector<Tensor> grad_sum;
    grad_sum.reserve(params.size());
    for (const Tensor& p : params) grad_sum.push_back(Tensor::zeros(p.shape()));
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
      loss_sum += elem_loss[bi];
      for (std::size_t pi = 0; pi < grad_sum.size(); ++pi) {
        const Tensor& g = elem_grads[bi][pi];
        for (std::size_t j = 0; j < g.size(); ++j) grad_sum[pi][j] += g[j];
      }
    }
    const double step_loss = loss_sum / static_cast<double>(batch.size());
    if (!std::isfinite(step_loss)) throw TrainingDiverged("non-finite training loss");
    for (Tensor& g : grad_sum) {
      for (std::size_t j = 0; j < g.size(); ++j) g[j] /= static_cast<double>(batch.size());
    }

    adam_step(params, grad_sum, adam);
    out.report.train_loss.push_back(step_loss);
    out.report.steps_run = step + 1;

    if (cfg.validation_every > 0 && (step + 1) % cfg.validation_every == 0) {
      net.unflatten(params);
      const double vl = validate();
      if (!std::isfinite(vl)) throw TrainingDiverged("non-finite validation loss");
      out.report.val_loss.emplace_back(step + 1, vl);
      if (on_validation) on_validation(step + 1, vl, net);
      if (vl < best_val - cfg.early_stop_delta) {
        best_val = vl;
        stale_validations = 0;
      } else {
        ++stale_validations;
        if (stale_validations >= cfg.early_stop_patience) {
          out.report.early_stopped = true;
          break;
        }
      }
    }
  }

  net.unflatten(params);
  out.params = std::move(net);
  return out;
}

}  // namespace xgrasp
