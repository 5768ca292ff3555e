// Command-line front end: dataset generation, supervision-transfer training,
// the four-policy evaluation protocols, single-scene planning, and heatmap
// export. Every subcommand is reproducible from (config, seed).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xgrasp/checkpoint.hpp"
#include "xgrasp/dataset.hpp"
#include "xgrasp/eval.hpp"
#include "xgrasp/fusion.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/report.hpp"
#include "xgrasp/scene.hpp"
#include "xgrasp/teacher.hpp"
#include "xgrasp/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xgrasp;

namespace {

// Exit codes: 0 ok, 1 internal error, 2 bad input/path, 3 training
// divergence, 4 every clutter attempt declined by the crop sampler.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitAllDeclined = 4;

struct CommonOpts {
  std::uint64_t seed = 12345;  // fixed default for reproducibility
  int threads = 0;
  std::string config_path;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("bad config JSON: " + std::string(e.what()));
  }
  return j;
}

// Flags win over the config file: only unset flags take config values.
template <typename T>
void config_default(const CLI::App& app, const json& cfg, const std::string& flag,
                    const std::string& key, T& value) {
  if (app.count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

int resolve_threads(int threads) {
  return threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  std::string out;
  int n_opaque = 200;
  int n_transparent = 25;
  int n_specular = 25;
  int n_val = 50;
  bool force = false;
  std::string preset = "desk";  // desk: 0.32 m square; paper: 0.68 x 0.40 m
};

SceneSpec preset_workspace(const std::string& preset) {
  SceneSpec spec;
  if (preset == "paper") {
    spec.workspace_x = 0.68;
    spec.workspace_y = 0.40;
  }
  return spec;
}

int run_gen_data(const GenDataOpts& opt, const CommonOpts& common) {
  const fs::path root(opt.out);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!opt.force) {
      std::cerr << "output directory " << root << " is not empty (use --force)\n";
      return kExitBadInput;
    }
    fs::remove_all(root);
  }
  fs::create_directories(root);

  DatasetManifest manifest;
  const SceneSpec workspace = preset_workspace(opt.preset);
  manifest.resolution = workspace.resolution;

  int scene_index = 0;
  auto emit = [&](MaterialClass mat, const std::string& split) {
    Rng rng = make_rng(common.seed, static_cast<std::uint64_t>(scene_index));
    std::uniform_int_distribution<int> nobj(1, 4);
    std::vector<MaterialClass> mats(static_cast<std::size_t>(nobj(rng)), mat);
    SceneSpec spec = preset_workspace(opt.preset);
    for (MaterialClass m : mats) {
      SceneObject o = sample_object(rng, m);
      place_object(o, spec, rng, 0.07);
      spec.objects.push_back(o);
    }
    Scene scene = generate_scene(spec, 0);
    // lighting varies per scene, echoing capture under varying illuminance
    std::uniform_real_distribution<double> illum(0.7, 1.4);
    const double il = illum(rng);
    const std::uint64_t render_seed = rng();
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%05d", scene_index);
    PairedSample sample =
        render_pair(scene, manifest.camera_height, il, render_seed, DepthNoiseModel{}, 0.01, id);
    write_scene_dir(root / id, spec, render_seed, sample);
    manifest.entries.push_back({id, split, sample.opaque_only});
    ++scene_index;
  };

  for (int i = 0; i < opt.n_opaque; ++i) emit(MaterialClass::Opaque, "train");
  for (int i = 0; i < opt.n_transparent; ++i) emit(MaterialClass::Transparent, "train");
  for (int i = 0; i < opt.n_specular; ++i) emit(MaterialClass::Specular, "train");
  for (int i = 0; i < opt.n_val; ++i) emit(MaterialClass::Opaque, "val");

  write_manifest(root, manifest);
  std::cout << "wrote " << scene_index << " scenes to " << root.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string out;
  std::string modality = "rgb";
  TrainConfig cfg;
  bool desk = false;
};

int run_train(const TrainOpts& opt, const CommonOpts& common) {
  const fs::path data(opt.data);
  if (!fs::exists(data / "manifest.json")) {
    std::cerr << "no dataset manifest at " << (data / "manifest.json").string() << "\n";
    return kExitBadInput;
  }
  const fs::path out(opt.out);
  fs::create_directories(out);

  DatasetManifest manifest = read_manifest(data);
  std::vector<PairedSample> train_set = load_split(data, manifest, "train");
  std::vector<PairedSample> val_set = load_split(data, manifest, "val");
  if (train_set.empty()) {
    std::cerr << "dataset has no training split\n";
    return kExitBadInput;
  }

  TrainConfig cfg = opt.cfg;
  cfg.seed = common.seed;
  cfg.threads = resolve_threads(common.threads);
  if (opt.desk) {
    // desk-scale recipe: the reference learning rate converges impractically
    // slowly on 32x32 inputs
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 32;
  }

  TeacherOracle teacher;
  teacher.camera_height = manifest.camera_height;
  const Modality modality = opt.modality == "rgbd" ? Modality::Rgbd : Modality::Rgb;

  std::cout << "training " << opt.modality << " student on " << train_set.size()
            << " pairs (opaque-only filtering applies), lr " << cfg.learning_rate << ", batch "
            << cfg.batch_size << ", max " << cfg.max_steps << " steps\n";

  TrainOutcome outcome =
      train(cfg, SampleSource::from(train_set), SampleSource::from(val_set), modality, teacher,
            [&](int step, double val_loss, const NetworkParams& net) {
              char name[64];
              std::snprintf(name, sizeof(name), "ckpt_step_%06d.ckpt", step);
              save_network(out / name, net, step);
              std::cout << "  step " << step << "  val_loss " << fixed6(val_loss) << "\n";
            });

  save_network(out / "final.ckpt", outcome.params, outcome.report.steps_run,
               json{{"modality", opt.modality}});
  write_loss_csv(out / "loss.csv", outcome.report);
  std::cout << "finished after " << outcome.report.steps_run << " steps"
            << (outcome.report.early_stopped ? " (early stop)" : "") << "; checkpoint "
            << (out / "final.ckpt").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / plan / heatmap helpers

struct PolicyOpts {
  std::string policy = "depth";
  std::string rgb_checkpoint;
  std::string rgbd_checkpoint;
};

struct LoadedPolicies {
  NetworkParams rgb_net, rgbd_net;
  bool has_rgb = false, has_rgbd = false;

  Policy make(const std::string& name, const TeacherOracle& teacher) const {
    if (name == "depth") return Policy::depth_only(teacher);
    if (name == "rgb-st") {
      if (!has_rgb) throw ConfigError("policy rgb-st needs --rgb-checkpoint");
      return Policy::rgb(rgb_net, teacher);
    }
    if (name == "rgbd-st") {
      if (!has_rgbd) throw ConfigError("policy rgbd-st needs --rgbd-checkpoint");
      return Policy::rgbd(rgbd_net, teacher);
    }
    if (name == "rgbd-m") {
      if (!has_rgb) throw ConfigError("policy rgbd-m needs --rgb-checkpoint");
      return Policy::late_fusion(rgb_net, teacher);
    }
    throw ConfigError("unknown policy '" + name + "'");
  }
};

LoadedPolicies load_policies(const PolicyOpts& opt) {
  LoadedPolicies lp;
  if (!opt.rgb_checkpoint.empty()) {
    lp.rgb_net = load_network(opt.rgb_checkpoint);
    if (lp.rgb_net.input_channels != 3) throw ConfigError("--rgb-checkpoint is not a 3-channel net");
    lp.has_rgb = true;
  }
  if (!opt.rgbd_checkpoint.empty()) {
    lp.rgbd_net = load_network(opt.rgbd_checkpoint);
    if (lp.rgbd_net.input_channels != 4) {
      throw ConfigError("--rgbd-checkpoint is not a 4-channel net");
    }
    lp.has_rgbd = true;
  }
  return lp;
}

std::vector<std::string> policy_list(const std::string& policy, const LoadedPolicies& lp) {
  if (policy != "all") return {policy};
  std::vector<std::string> out = {"depth"};
  if (lp.has_rgb) out.push_back("rgb-st");
  if (lp.has_rgbd) out.push_back("rgbd-st");
  if (lp.has_rgb) out.push_back("rgbd-m");
  return out;
}

std::vector<SceneObject> eval_object_set(MaterialClass mat, std::uint64_t seed, int n) {
  std::vector<SceneObject> out;
  Rng rng = make_rng(seed, 50 + static_cast<std::uint64_t>(mat));
  for (int i = 0; i < n; ++i) out.push_back(sample_object(rng, mat));
  return out;
}

PairedSample load_observation(const std::string& scene_dir) {
  const fs::path dir(scene_dir);
  SceneSpec spec = load_scene_spec(dir);
  DatasetEntry entry{dir.filename().string(), "", spec.all_opaque()};
  return load_scene_dir(dir, entry);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  PolicyOpts policies;
  std::string out;
  std::string mode = "both";           // isolated | clutter | both
  std::string crop_sampling = "both";  // on | off | both (clutter only)
  int trials = 5;
  int objects = 15;
  int clutter_objects = 6;
  CropSamplerConfig crop;
};

int run_eval(const EvalOpts& opt, const CommonOpts& common) {
  const fs::path out(opt.out);
  fs::create_directories(out);
  const LoadedPolicies lp = load_policies(opt.policies);
  const std::vector<std::string> policies = policy_list(opt.policies.policy, lp);
  TeacherOracle teacher;
  EvalRenderConfig render_cfg;

  const std::vector<MaterialClass> materials = {
      MaterialClass::Opaque, MaterialClass::Transparent, MaterialClass::Specular};

  if (opt.mode == "isolated" || opt.mode == "both") {
    std::vector<SummaryRow> rows;
    for (const std::string& name : policies) {
      Policy policy = lp.make(name, teacher);
      SuccessStats merged;
      merged.trials = opt.trials;
      for (MaterialClass m : materials) {
        SuccessStats st = run_isolated(policy, eval_object_set(m, common.seed, opt.objects),
                                       opt.trials, common.seed, render_cfg);
        merged.per_trial_rates[material_index(m)] = st.per_trial_rates[material_index(m)];
        std::cout << "isolated " << name << " " << material_name(m) << ": "
                  << fixed6(st.mean(m)) << " +- " << fixed6(st.stddev(m)) << "\n";
      }
      rows.push_back({name, merged});
    }
    write_summary_csv(out / "isolated_summary.csv", rows);
  }

  bool all_declined = true;
  bool any_clutter = false;
  if (opt.mode == "clutter" || opt.mode == "both") {
    std::vector<ClutterReport> reports;
    std::vector<bool> crop_variants;
    if (opt.crop_sampling == "on") {
      crop_variants = {true};
    } else if (opt.crop_sampling == "off") {
      crop_variants = {false};
    } else {
      crop_variants = {true, false};
    }
    for (const std::string& name : policies) {
      Policy policy = lp.make(name, teacher);
      for (bool crop_on : crop_variants) {
        for (MaterialClass m : materials) {
          ClutterReport report;
          report.policy = name;
          report.material = material_name(m);
          report.crop_sampling = crop_on;
          for (int trial = 0; trial < opt.trials; ++trial) {
            Rng rng = make_rng(common.seed, 9000 + static_cast<std::uint64_t>(trial) * 16 +
                                                static_cast<std::uint64_t>(m));
            SceneSpec spec = sample_scene_spec(
                rng, std::vector<MaterialClass>(static_cast<std::size_t>(opt.clutter_objects), m),
                0.40);
            std::optional<CropSamplerConfig> crop_cfg;
            if (crop_on) crop_cfg = opt.crop;
            TrialResult result = run_clutter(policy, spec, crop_cfg, rng(), render_cfg);
            any_clutter = true;
            for (const GraspAttempt& a : result.attempts) {
              if (!a.no_valid_crop) all_declined = false;
            }
            report.trials.push_back(std::move(result));
          }
          std::cout << "clutter " << name << " " << material_name(m)
                    << (crop_on ? " crop=on " : " crop=off ") << fixed6(report.mean_success())
                    << " +- " << fixed6(report.stddev_success()) << "\n";
          reports.push_back(std::move(report));
        }
      }
    }
    write_clutter_csv(out / "clutter_summary.csv", reports);
    write_clutter_results(out / "results.json", reports);
  }

  if (any_clutter && all_declined) {
    std::cerr << "every clutter attempt was declined by the crop sampler\n";
    return kExitAllDeclined;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plan / heatmap

struct PlanOpts {
  PolicyOpts policies;
  std::string scene_dir;
  std::string crop_sampling = "off";
  CropSamplerConfig crop;
};

int run_plan(const PlanOpts& opt, const CommonOpts& common) {
  const LoadedPolicies lp = load_policies(opt.policies);
  TeacherOracle teacher;
  Policy policy = lp.make(opt.policies.policy, teacher);
  PairedSample sample = load_observation(opt.scene_dir);
  ScoreVolume vol = score_scene(policy, sample);

  json result;
  result["policy"] = opt.policies.policy;
  result["scene"] = sample.scene_id;
  if (opt.crop_sampling == "on") {
    CropSelection sel = select_cropped(vol, opt.crop, 0.01, common.seed);
    result["crop_attempts"] = sel.attempts;
    if (!sel.grasp.has_value()) {
      result["grasp"] = nullptr;
      result["no_valid_crop"] = true;
      std::cout << result.dump(2) << "\n";
      return kExitOk;
    }
    result["grasp"] = {{"x", sel.grasp->x},
                       {"y", sel.grasp->y},
                       {"theta_bin", sel.grasp->theta_bin},
                       {"score", score_at(vol, *sel.grasp)}};
  } else {
    GraspCandidate q = select_argmax(vol);
    result["grasp"] = {
        {"x", q.x}, {"y", q.y}, {"theta_bin", q.theta_bin}, {"score", score_at(vol, q)}};
  }
  std::cout << result.dump(2) << "\n";
  return kExitOk;
}

struct HeatmapOpts {
  PolicyOpts policies;
  std::string scene_dir;
  std::string out;
  std::string theta = "max";
};

int run_heatmap(const HeatmapOpts& opt, const CommonOpts&) {
  const LoadedPolicies lp = load_policies(opt.policies);
  TeacherOracle teacher;
  Policy policy = lp.make(opt.policies.policy, teacher);
  PairedSample sample = load_observation(opt.scene_dir);
  ScoreVolume vol = score_scene(policy, sample);
  const int theta_bin = opt.theta == "max" ? kThetaMax : std::stoi(opt.theta);
  export_heatmap(vol, theta_bin, opt.out);
  std::cout << "wrote " << opt.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineOpts {
  std::string out;
  int scenes_opaque = 200;
  int scenes_transparent = 25;
  int scenes_specular = 25;
  int scenes_val = 50;
  int steps = 2000;
  int trials = 5;
  int objects = 15;
  int clutter_objects = 6;
};

int run_pipeline(const PipelineOpts& opt, const CommonOpts& common) {
  const fs::path out(opt.out);
  fs::create_directories(out);

  std::cout << "[1/4] gen-data\n";
  GenDataOpts gen;
  gen.out = (out / "data").string();
  gen.n_opaque = opt.scenes_opaque;
  gen.n_transparent = opt.scenes_transparent;
  gen.n_specular = opt.scenes_specular;
  gen.n_val = opt.scenes_val;
  gen.force = true;
  if (int rc = run_gen_data(gen, common); rc != kExitOk) return rc;

  for (const char* modality : {"rgb", "rgbd"}) {
    std::cout << "[2/4] train " << modality << "\n";
    TrainOpts tr;
    tr.data = gen.out;
    tr.out = (out / (std::string("train_") + modality)).string();
    tr.modality = modality;
    tr.desk = true;
    tr.cfg.max_steps = opt.steps;
    tr.cfg.validation_every = 100;
    if (int rc = run_train(tr, common); rc != kExitOk) return rc;
  }

  std::cout << "[3/4] eval\n";
  EvalOpts ev;
  ev.policies.policy = "all";
  ev.policies.rgb_checkpoint = (out / "train_rgb" / "final.ckpt").string();
  ev.policies.rgbd_checkpoint = (out / "train_rgbd" / "final.ckpt").string();
  ev.out = (out / "eval").string();
  ev.trials = opt.trials;
  ev.objects = opt.objects;
  ev.clutter_objects = opt.clutter_objects;
  if (int rc = run_eval(ev, common); rc != kExitOk) return rc;

  std::cout << "[4/4] heatmaps\n";
  {
    const LoadedPolicies lp = load_policies(ev.policies);
    TeacherOracle teacher;
    // one scene per material class, all four policies
    fs::create_directories(out / "heatmaps");
    for (MaterialClass m :
         {MaterialClass::Opaque, MaterialClass::Transparent, MaterialClass::Specular}) {
      Rng rng = make_rng(common.seed, 7777 + static_cast<std::uint64_t>(m));
      SceneSpec spec = sample_scene_spec(rng, {m, m, m});
      Scene scene = generate_scene(spec, 0);
      PairedSample sample = render_pair(scene, kDefaultCameraHeight, 1.0, rng());
      for (const std::string& name : policy_list("all", lp)) {
        Policy policy = lp.make(name, teacher);
        ScoreVolume vol = score_scene(policy, sample);
        export_heatmap(vol, kThetaMax,
                       out / "heatmaps" /
                           (std::string(material_name(m)) + "_" + name + ".pgm"));
      }
    }
  }
  std::cout << "pipeline complete: " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal grasp supervision transfer toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--seed", common.seed, "master seed (default 12345)");
  app.add_option("--threads", common.threads, "worker threads (0 = all cores)");
  app.add_option("--config", common.config_path, "JSON config file; flags win over file values");

  GenDataOpts gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic paired dataset");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--opaque", gen.n_opaque, "opaque training scenes (default 200)");
  gen_cmd->add_option("--transparent", gen.n_transparent, "transparent scenes (default 25)");
  gen_cmd->add_option("--specular", gen.n_specular, "specular scenes (default 25)");
  gen_cmd->add_option("--val", gen.n_val, "opaque validation scenes (default 50)");
  gen_cmd->add_option("--preset", gen.preset, "workspace preset: desk|paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  gen_cmd->add_flag("--force", gen.force, "overwrite a non-empty output directory");

  TrainOpts tr;
  int tr_loss_is_mse = 0;
  CLI::App* tr_cmd = app.add_subcommand("train", "distill the depth teacher into a student");
  tr_cmd->add_option("--data", tr.data, "dataset directory (from gen-data)")->required();
  tr_cmd->add_option("--out", tr.out, "output directory for checkpoints")->required();
  tr_cmd->add_option("--modality", tr.modality, "student input: rgb|rgbd")
      ->check(CLI::IsMember({"rgb", "rgbd"}));
  tr_cmd->add_option("--lr", tr.cfg.learning_rate, "learning rate (default 1e-5)");
  tr_cmd->add_option("--batch", tr.cfg.batch_size, "batch size (default 64)");
  tr_cmd->add_option("--steps", tr.cfg.max_steps, "max training steps");
  tr_cmd->add_option("--augments", tr.cfg.augmentations_per_image,
                     "augmentations per image (default 32)");
  tr_cmd->add_option("--val-every", tr.cfg.validation_every, "validation cadence in steps");
  tr_cmd->add_flag("--mse", tr_loss_is_mse, "use mean squared error instead of BCE");
  tr_cmd->add_flag("--desk", tr.desk, "desk-scale recipe (lr 1e-3, batch 32)");

  EvalOpts ev;
  CLI::App* ev_cmd = app.add_subcommand("eval", "run the grasping evaluation protocols");
  ev_cmd->add_option("--policy", ev.policies.policy, "depth|rgb-st|rgbd-st|rgbd-m|all")
      ->check(CLI::IsMember({"depth", "rgb-st", "rgbd-st", "rgbd-m", "all"}));
  ev_cmd->add_option("--rgb-checkpoint", ev.policies.rgb_checkpoint, "RGB student checkpoint");
  ev_cmd->add_option("--rgbd-checkpoint", ev.policies.rgbd_checkpoint, "RGB-D student checkpoint");
  ev_cmd->add_option("--out", ev.out, "report directory")->required();
  ev_cmd->add_option("--mode", ev.mode, "isolated|clutter|both")
      ->check(CLI::IsMember({"isolated", "clutter", "both"}));
  ev_cmd->add_option("--trials", ev.trials, "trials per protocol (default 5)");
  ev_cmd->add_option("--objects", ev.objects, "objects per material set (default 15)");
  ev_cmd->add_option("--clutter-objects", ev.clutter_objects, "objects per clutter scene");
  ev_cmd->add_option("--crop-sampling", ev.crop_sampling, "on|off|both (clutter)")
      ->check(CLI::IsMember({"on", "off", "both"}));
  ev_cmd->add_option("--crop-threshold", ev.crop.score_threshold, "crop accept threshold");
  ev_cmd->add_option("--crop-size", ev.crop.crop_size, "crop size in meters (default 0.2)");

  PlanOpts plan;
  CLI::App* plan_cmd = app.add_subcommand("plan", "plan one grasp for a stored scene");
  plan_cmd->add_option("--scene", plan.scene_dir, "scene directory (from gen-data)")->required();
  plan_cmd->add_option("--policy", plan.policies.policy, "depth|rgb-st|rgbd-st|rgbd-m")
      ->check(CLI::IsMember({"depth", "rgb-st", "rgbd-st", "rgbd-m"}));
  plan_cmd->add_option("--rgb-checkpoint", plan.policies.rgb_checkpoint, "RGB student checkpoint");
  plan_cmd->add_option("--rgbd-checkpoint", plan.policies.rgbd_checkpoint,
                       "RGB-D student checkpoint");
  plan_cmd->add_option("--crop-sampling", plan.crop_sampling, "on|off")
      ->check(CLI::IsMember({"on", "off"}));
  plan_cmd->add_option("--crop-threshold", plan.crop.score_threshold, "crop accept threshold");
  plan_cmd->add_option("--crop-size", plan.crop.crop_size, "crop size in meters");

  HeatmapOpts hm;
  CLI::App* hm_cmd = app.add_subcommand("heatmap", "export a grasp-quality heatmap as PGM");
  hm_cmd->add_option("--scene", hm.scene_dir, "scene directory (from gen-data)")->required();
  hm_cmd->add_option("--out", hm.out, "output PGM path")->required();
  hm_cmd->add_option("--policy", hm.policies.policy, "depth|rgb-st|rgbd-st|rgbd-m")
      ->check(CLI::IsMember({"depth", "rgb-st", "rgbd-st", "rgbd-m"}));
  hm_cmd->add_option("--rgb-checkpoint", hm.policies.rgb_checkpoint, "RGB student checkpoint");
  hm_cmd->add_option("--rgbd-checkpoint", hm.policies.rgbd_checkpoint, "RGB-D student checkpoint");
  hm_cmd->add_option("--theta", hm.theta, "theta bin 0..15 or 'max'");

  PipelineOpts pipe;
  CLI::App* pipe_cmd =
      app.add_subcommand("pipeline", "end to end: gen-data, train both students, eval, heatmaps");
  pipe_cmd->add_option("--out", pipe.out, "working directory")->required();
  pipe_cmd->add_option("--opaque", pipe.scenes_opaque, "opaque training scenes");
  pipe_cmd->add_option("--transparent", pipe.scenes_transparent, "transparent scenes");
  pipe_cmd->add_option("--specular", pipe.scenes_specular, "specular scenes");
  pipe_cmd->add_option("--val", pipe.scenes_val, "validation scenes");
  pipe_cmd->add_option("--steps", pipe.steps, "training steps per student");
  pipe_cmd->add_option("--trials", pipe.trials, "evaluation trials");
  pipe_cmd->add_option("--objects", pipe.objects, "objects per material set");
  pipe_cmd->add_option("--clutter-objects", pipe.clutter_objects, "objects per clutter scene");

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(common.config_path);
    config_default(app, cfg, "--seed", "seed", common.seed);
    config_default(app, cfg, "--threads", "threads", common.threads);

    if (gen_cmd->parsed()) {
      config_default(*gen_cmd, cfg, "--opaque", "opaque", gen.n_opaque);
      config_default(*gen_cmd, cfg, "--transparent", "transparent", gen.n_transparent);
      config_default(*gen_cmd, cfg, "--specular", "specular", gen.n_specular);
      config_default(*gen_cmd, cfg, "--val", "val", gen.n_val);
      return run_gen_data(gen, common);
    }
    if (tr_cmd->parsed()) {
      config_default(*tr_cmd, cfg, "--lr", "learning_rate", tr.cfg.learning_rate);
      config_default(*tr_cmd, cfg, "--batch", "batch_size", tr.cfg.batch_size);
      config_default(*tr_cmd, cfg, "--steps", "max_steps", tr.cfg.max_steps);
      config_default(*tr_cmd, cfg, "--augments", "augmentations_per_image",
                     tr.cfg.augmentations_per_image);
      config_default(*tr_cmd, cfg, "--val-every", "validation_every", tr.cfg.validation_every);
      if (tr_loss_is_mse) tr.cfg.loss = LossKind::Mse;
      return run_train(tr, common);
    }
    if (ev_cmd->parsed()) {
      config_default(*ev_cmd, cfg, "--trials", "trials", ev.trials);
      config_default(*ev_cmd, cfg, "--objects", "objects", ev.objects);
      config_default(*ev_cmd, cfg, "--crop-threshold", "crop_threshold",
                     ev.crop.score_threshold);
      config_default(*ev_cmd, cfg, "--crop-size", "crop_size", ev.crop.crop_size);
      return run_eval(ev, common);
    }
    if (plan_cmd->parsed()) return run_plan(plan, common);
    if (hm_cmd->parsed()) return run_heatmap(hm, common);
    if (pipe_cmd->parsed()) return run_pipeline(pipe, common);
    std::cerr << "no subcommand\n";
    return kExitBadInput;
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitInternal;
  }
}
