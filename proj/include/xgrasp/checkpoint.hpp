#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xgrasp/errors.hpp"
#include "xgrasp/network.hpp"
#include "xgrasp/tensor.hpp"

namespace xgrasp {

// One-file container used for checkpoints and exported score volumes:
// a single-line JSON header (names, shapes, free-form meta), a newline,
// then the tensors' raw little-endian 64-bit floats in declared order.

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Blob {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  const Tensor& find(const std::string& name) const {
    for (const NamedTensor& t : tensors) {
      if (t.name == name) return t.tensor;
    }
    throw IoError("blob is missing tensor '" + name + "'");
  }
};

namespace detail {

inline void write_le_double(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double read_le_double(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_blob(const std::filesystem::path& path, const nlohmann::json& meta,
                      const std::vector<NamedTensor>& tensors) {
  nlohmann::json header;
  header["format"] = "xgrasp-blob-v1";
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::size_t total = 0;
  for (const NamedTensor& t : tensors) {
    header["tensors"].push_back({{"name", t.name}, {"shape", t.tensor.shape()}});
    total += t.tensor.size();
  }

  std::string payload;
  payload.reserve(total * 8);
  for (const NamedTensor& t : tensors) {
    for (std::size_t i = 0; i < t.tensor.size(); ++i) detail::write_le_double(payload, t.tensor[i]);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << "\n";
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to " + path.string());
}

namespace detail {

inline nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers) {
  nlohmann::json j = nlohmann::json::array();
  for (const LayerSpec& l : layers) {
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        j.push_back({{"kind", "conv"},
                     {"out", l.out_channels},
                     {"k", l.kernel},
                     {"stride", l.stride},
                     {"pad", l.pad}});
        break;
      case LayerSpec::Kind::MaxPool:
        j.push_back({{"kind", "maxpool"}, {"window", l.window}});
        break;
      case LayerSpec::Kind::Act:
        j.push_back({{"kind", l.act == Activation::Relu ? "relu" : "sigmoid"}});
        break;
    }
  }
  return j;
}

inline std::vector<LayerSpec> layers_from_json(const nlohmann::json& j) {
  std::vector<LayerSpec> layers;
  for (const auto& jl : j) {
    const std::string kind = jl.at("kind").get<std::string>();
    if (kind == "conv") {
      layers.push_back(LayerSpec::conv(jl.at("out").get<int>(), jl.at("k").get<int>(),
                                       jl.at("stride").get<int>(), jl.at("pad").get<int>()));
    } else if (kind == "maxpool") {
      layers.push_back(LayerSpec::maxpool(jl.at("window").get<int>()));
    } else if (kind == "relu") {
      layers.push_back(LayerSpec::activation(Activation::Relu));
    } else if (kind == "sigmoid") {
      layers.push_back(LayerSpec::activation(Activation::Sigmoid));
    } else {
      throw IoError("unknown layer kind '" + kind + "'");
    }
  }
  return layers;
}

}  // namespace detail

inline Blob load_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing blob header: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad blob header in " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != "xgrasp-blob-v1") {
    throw IoError("unrecognized blob format: " + path.string());
  }

  Blob blob;
  blob.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    const std::size_t n = Tensor::count(shape);
    std::vector<char> raw(n * 8);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("truncated blob payload: " + path.string());
    Tensor t = Tensor::zeros(shape);
    for (std::size_t i = 0; i < n; ++i) t[i] = detail::read_le_double(raw.data() + 8 * i);
    blob.tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
  }
  return blob;
}

/// Network checkpoint: layer names/shapes plus optimizer step in the JSON
/// header, weights as the payload.
inline void save_network(const std::filesystem::path& path, const NetworkParams& net,
                         long long optimizer_step = 0,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json meta;
  meta["kind"] = "network-checkpoint";
  meta["input_channels"] = net.input_channels;
  meta["layers"] = detail::layers_to_json(net.layers);
  meta["optimizer_step"] = optimizer_step;
  meta["extra"] = extra;

  std::vector<NamedTensor> tensors;
  for (std::size_t i = 0; i < net.kernels.size(); ++i) {
    tensors.push_back({"conv" + std::to_string(i) + ".weight", net.kernels[i]});
    tensors.push_back({"conv" + std::to_string(i) + ".bias", net.biases[i]});
  }
  save_blob(path, meta, tensors);
}

inline NetworkParams load_network(const std::filesystem::path& path) {
  const Blob blob = load_blob(path);
  if (blob.meta.value("kind", "") != "network-checkpoint") {
    throw IoError("not a network checkpoint: " + path.string());
  }
  NetworkParams net;
  net.input_channels = blob.meta.at("input_channels").get<int>();
  net.layers = detail::layers_from_json(blob.meta.at("layers"));
  for (const LayerSpec& l : net.layers) {
    if (l.kind != LayerSpec::Kind::Conv) continue;
    const std::size_t i = net.kernels.size();
    net.kernels.push_back(blob.find("conv" + std::to_string(i) + ".weight"));
    net.biases.push_back(blob.find("conv" + std::to_string(i) + ".bias"));
  }
  return net;
}

/// Score-volume export in the same container.
inline void save_score_volume(const std::filesystem::path& path, const ScoreVolume& vol) {
  nlohmann::json meta;
  meta["kind"] = "score-volume";
  meta["modality"] = vol.modality;
  meta["theta_bins"] = vol.theta_bins;
  meta["cell_stride"] = vol.cell_stride;
  save_blob(path, meta, {{"scores", vol.scores}});
}

inline ScoreVolume load_score_volume(const std::filesystem::path& path) {
  const Blob blob = load_blob(path);
  if (blob.meta.value("kind", "") != "score-volume") {
    throw IoError("not a score volume: " + path.string());
  }
  ScoreVolume vol;
  vol.scores = blob.find("scores");
  vol.modality = blob.meta.value("modality", "");
  vol.theta_bins = blob.meta.value("theta_bins", kThetaBins);
  vol.cell_stride = blob.meta.value("cell_stride", 1);
  return vol;
}


}  // namespace xgrasp
