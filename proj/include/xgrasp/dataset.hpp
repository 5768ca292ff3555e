#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xgrasp/errors.hpp"
#include "xgrasp/image_io.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/scene.hpp"

namespace xgrasp {

// On-disk dataset layout:
//   <root>/manifest.json
//   <root>/<scene-id>/scene.json   spec + seeds
//   <root>/<scene-id>/depth.pgm    16-bit, millimeters (0 = no return)
//   <root>/<scene-id>/rgb.ppm      8-bit

struct DatasetEntry {
  std::string id;
  std::string split;  // "train" | "val"
  bool opaque_only = false;
};

struct DatasetManifest {
  double camera_height = kDefaultCameraHeight;
  double resolution = 0.01;
  double illum = 1.0;
  std::vector<DatasetEntry> entries;
};

namespace detail {

inline nlohmann::json color_to_json(const RgbColor& c) {
  return nlohmann::json::array({c.r, c.g, c.b});
}

inline RgbColor color_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::Box:
      return "box";
    case ShapeKind::Cylinder:
      return "cylinder";
    case ShapeKind::Ridge:
      return "ridge";
  }
  return "?";
}

inline ShapeKind shape_from_name(const std::string& s) {
  if (s == "box") return ShapeKind::Box;
  if (s == "cylinder") return ShapeKind::Cylinder;
  if (s == "ridge") return ShapeKind::Ridge;
  throw IoError("unknown shape kind '" + s + "'");
}

inline MaterialClass material_from_name(const std::string& s) {
  if (s == "opaque") return MaterialClass::Opaque;
  if (s == "transparent") return MaterialClass::Transparent;
  if (s == "specular") return MaterialClass::Specular;
  throw IoError("unknown material '" + s + "'");
}

}  // namespace detail

inline nlohmann::json scene_spec_to_json(const SceneSpec& spec) {
  nlohmann::json j;
  j["workspace"] = {spec.workspace_x, spec.workspace_y};
  j["resolution"] = spec.resolution;
  j["table_color"] = detail::color_to_json(spec.table_color);
  j["objects"] = nlohmann::json::array();
  for (const SceneObject& o : spec.objects) {
    j["objects"].push_back({{"shape", detail::shape_name(o.shape)},
                            {"pose", {o.x, o.y, o.rotation}},
                            {"dims", {o.dim_x, o.dim_y}},
                            {"height", o.height},
                            {"material", material_name(o.material)},
                            {"albedo", detail::color_to_json(o.albedo)}});
  }
  return j;
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec spec;
  spec.workspace_x = j.at("workspace").at(0).get<double>();
  spec.workspace_y = j.at("workspace").at(1).get<double>();
  spec.resolution = j.at("resolution").get<double>();
  spec.table_color = detail::color_from_json(j.at("table_color"));
  for (const auto& jo : j.at("objects")) {
    SceneObject o;
    o.shape = detail::shape_from_name(jo.at("shape").get<std::string>());
    o.x = jo.at("pose").at(0).get<double>();
    o.y = jo.at("pose").at(1).get<double>();
    o.rotation = jo.at("pose").at(2).get<double>();
    o.dim_x = jo.at("dims").at(0).get<double>();
    o.dim_y = jo.at("dims").at(1).get<double>();
    o.height = jo.at("height").get<double>();
    o.material = detail::material_from_name(jo.at("material").get<std::string>());
    o.albedo = detail::color_from_json(jo.at("albedo"));
    spec.objects.push_back(o);
  }
  return spec;
}

inline void write_scene_dir(const std::filesystem::path& dir, const SceneSpec& spec,
                            std::uint64_t render_seed, const PairedSample& sample) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["spec"] = scene_spec_to_json(spec);
  j["render_seed"] = render_seed;
  std::ofstream scene_json(dir / "scene.json");
  if (!scene_json) throw IoError("cannot write " + (dir / "scene.json").string());
  scene_json << j.dump(2) << "\n";

  const int h = sample.depth.dim(1), w = sample.depth.dim(2);
  std::vector<std::uint16_t> mm(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < mm.size(); ++i) {
    const double v = std::clamp(sample.depth[i] * 1000.0, 0.0, 65535.0);
    mm[i] = static_cast<std::uint16_t>(v + 0.5);
  }
  write_pgm16(dir / "depth.pgm", w, h, mm);

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(h) * w * 3);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int c = 0; c < 3; ++c) {
        rgb[(static_cast<std::size_t>(py) * w + px) * 3 + c] = quantize8(sample.rgb.at3(c, py, px));
      }
    }
  }
  write_ppm8(dir / "rgb.ppm", w, h, rgb);
}

inline PairedSample load_scene_dir(const std::filesystem::path& dir, const DatasetEntry& entry) {
  int w = 0, h = 0;
  std::vector<std::uint16_t> mm = read_pgm16(dir / "depth.pgm", w, h);
  PairedSample s;
  s.scene_id = entry.id;
  s.opaque_only = entry.opaque_only;
  s.depth = Tensor::zeros({1, h, w});
  for (std::size_t i = 0; i < mm.size(); ++i) s.depth[i] = mm[i] / 1000.0;

  int w2 = 0, h2 = 0;
  std::vector<std::uint8_t> rgb = read_ppm8(dir / "rgb.ppm", w2, h2);
  if (w2 != w || h2 != h) throw IoError("depth/rgb size mismatch in " + dir.string());
  s.rgb = Tensor::zeros({3, h, w});
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int c = 0; c < 3; ++c) {
        s.rgb.at3(c, py, px) = rgb[(static_cast<std::size_t>(py) * w + px) * 3 + c] / 255.0;
      }
    }
  }
  return s;
}

inline SceneSpec load_scene_spec(const std::filesystem::path& dir) {
  std::ifstream in(dir / "scene.json");
  if (!in) throw IoError("cannot read " + (dir / "scene.json").string());
  nlohmann::json j;
  in >> j;
  return scene_spec_from_json(j.at("spec"));
}

inline void write_manifest(const std::filesystem::path& root, const DatasetManifest& m) {
  nlohmann::json j;
  j["camera_height"] = m.camera_height;
  j["resolution"] = m.resolution;
  j["illum"] = m.illum;
  j["scenes"] = nlohmann::json::array();
  for (const DatasetEntry& e : m.entries) {
    j["scenes"].push_back({{"id", e.id}, {"split", e.split}, {"opaque_only", e.opaque_only}});
  }
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write " + (root / "manifest.json").string());
  out << j.dump(2) << "\n";
}

inline DatasetManifest read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot read " + (root / "manifest.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest in " + root.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.camera_height = j.at("camera_height").get<double>();
  m.resolution = j.at("resolution").get<double>();
  m.illum = j.value("illum", 1.0);
  for (const auto& je : j.at("scenes")) {
    m.entries.push_back({je.at("id").get<std::string>(), je.at("split").get<std::string>(),
                         je.at("opaque_only").get<bool>()});
  }
  return m;
}

inline std::vector<PairedSample> load_split(const std::filesystem::path& root,
                                            const DatasetManifest& m, const std::string& split) {
  std::vector<PairedSample> out;
  for (const DatasetEntry& e : m.entries) {
    if (e.split != split) continue;
    out.push_back(load_scene_dir(root / e.id, e));
  }
  return out;
}

}  // namespace xgrasp
