#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "xgrasp/errors.hpp"
#include "xgrasp/eval.hpp"

namespace xgrasp {

// Evaluation reports: results.json with per-trial attempts and a summary CSV
// shaped like the success-rate tables (rows = policy, columns = per-material
// mean/stddev). Numbers are printed with fixed precision so identical runs
// produce identical bytes.

inline std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct SummaryRow {
  std::string policy;
  SuccessStats stats;
};

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "policy,opaque_mean,opaque_stddev,transparent_mean,transparent_stddev,"
         "specular_mean,specular_stddev,trials\n";
  for (const SummaryRow& r : rows) {
    out << r.policy;
    for (MaterialClass m :
         {MaterialClass::Opaque, MaterialClass::Transparent, MaterialClass::Specular}) {
      if (r.stats.has(m)) {
        out << "," << fixed6(r.stats.mean(m)) << "," << fixed6(r.stats.stddev(m));
      } else {
        out << ",,";
      }
    }
    out << "," << r.stats.trials << "\n";
  }
}

inline nlohmann::json attempt_to_json(const GraspAttempt& a) {
  return {{"x", a.grasp.x},
          {"y", a.grasp.y},
          {"theta_bin", a.grasp.theta_bin},
          {"success", a.success},
          {"no_valid_crop", a.no_valid_crop},
          {"score", a.policy_score},
          {"grasped_object", a.grasped_object}};
}

inline nlohmann::json trial_to_json(const TrialResult& t) {
  nlohmann::json attempts = nlohmann::json::array();
  for (const GraspAttempt& a : t.attempts) attempts.push_back(attempt_to_json(a));
  return {{"attempts", attempts},
          {"termination", termination_name(t.termination)},
          {"objects_total", t.objects_total},
          {"objects_grasped", t.objects_grasped}};
}

struct ClutterReport {
  std::string policy;
  std::string material;
  bool crop_sampling = false;
  std::vector<TrialResult> trials;

  double mean_success() const {
    if (trials.empty()) return 0.0;
    double s = 0.0;
    for (const TrialResult& t : trials) s += t.success_rate();
    return s / static_cast<double>(trials.size());
  }
  double stddev_success() const {
    if (trials.size() < 2) return 0.0;
    const double mu = mean_success();
    double acc = 0.0;
    for (const TrialResult& t : trials) acc += (t.success_rate() - mu) * (t.success_rate() - mu);
    return std::sqrt(acc / static_cast<double>(trials.size() - 1));
  }
};

inline void write_clutter_results(const std::filesystem::path& path,
                                  const std::vector<ClutterReport>& reports) {
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  for (const ClutterReport& r : reports) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialResult& t : r.trials) trials.push_back(trial_to_json(t));
    j["reports"].push_back({{"policy", r.policy},
                            {"material", r.material},
                            {"crop_sampling", r.crop_sampling},
                            {"mean_success", r.mean_success()},
                            {"stddev_success", r.stddev_success()},
                            {"trials", trials}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline void write_clutter_csv(const std::filesystem::path& path,
                              const std::vector<ClutterReport>& reports) {
  // rows = policy x crop variant, columns = per-material mean/stddev
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "policy,crop_sampling,opaque_mean,opaque_stddev,transparent_mean,transparent_stddev,"
         "specular_mean,specular_stddev\n";
  std::map<std::pair<std::string, bool>, std::map<std::string, const ClutterReport*>> grouped;
  for (const ClutterReport& r : reports) {
    grouped[{r.policy, r.crop_sampling}][r.material] = &r;
  }
  for (const auto& [key, by_material] : grouped) {
    out << key.first << "," << (key.second ? "on" : "off");
    for (const char* m : {"opaque", "transparent", "specular"}) {
      auto it = by_material.find(m);
      if (it != by_material.end()) {
        out << "," << fixed6(it->second->mean_success()) << ","
            << fixed6(it->second->stddev_success());
      } else {
        out << ",,";
      }
    }
    out << "\n";
  }
}

inline void write_loss_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,train_loss,val_loss\n";
  std::map<int, double> val(report.val_loss.begin(), report.val_loss.end());
  for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
    const int step = static_cast<int>(i) + 1;
    out << step << "," << fixed6(report.train_loss[i]);
    auto it = val.find(step);
    if (it != val.end()) {
      out << "," << fixed6(it->second);
    } else {
      out << ",";
    }
    out << "\n";
  }
}

}  // namespace xgrasp
