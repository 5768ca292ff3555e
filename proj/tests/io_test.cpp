#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "xgrasp/checkpoint.hpp"
#include "xgrasp/dataset.hpp"
#include "xgrasp/image_io.hpp"
#include "xgrasp/network.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/scene.hpp"

using namespace xgrasp;

namespace {

class TempDir {
 public:
  explicit TempDir(const char* tag)
      : path_(std::filesystem::temp_directory_path() / ("xgrasp_io_" + std::string(tag))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(ImageIo, Pgm16RoundTripIsExact) {
  TempDir dir("pgm16");
  std::vector<std::uint16_t> px;
  xgrasp::Rng rng = make_rng(1);
  std::uniform_int_distribution<int> v(0, 65535);
  for (int i = 0; i < 7 * 5; ++i) px.push_back(static_cast<std::uint16_t>(v(rng)));
  write_pgm16(dir.path() / "a.pgm", 7, 5, px);
  int w = 0, h = 0;
  std::vector<std::uint16_t> back = read_pgm16(dir.path() / "a.pgm", w, h);
  EXPECT_EQ(w, 7);
  EXPECT_EQ(h, 5);
  EXPECT_EQ(back, px);
}

TEST(ImageIo, Ppm8RoundTripIsExact) {
  TempDir dir("ppm8");
  std::vector<std::uint8_t> px;
  xgrasp::Rng rng = make_rng(2);
  std::uniform_int_distribution<int> v(0, 255);
  for (int i = 0; i < 4 * 3 * 3; ++i) px.push_back(static_cast<std::uint8_t>(v(rng)));
  write_ppm8(dir.path() / "a.ppm", 4, 3, px);
  int w = 0, h = 0;
  std::vector<std::uint8_t> back = read_ppm8(dir.path() / "a.ppm", w, h);
  EXPECT_EQ(w, 4);
  EXPECT_EQ(h, 3);
  EXPECT_EQ(back, px);
}

TEST(ImageIo, RejectsWrongMagicAndTruncation) {
  TempDir dir("bad");
  {
    std::ofstream out(dir.path() / "bad.pgm", std::ios::binary);
    out << "P6\n2 2\n255\nxxxx";
  }
  int w = 0, h = 0;
  EXPECT_THROW(read_pgm8(dir.path() / "bad.pgm", w, h), IoError);
  {
    std::ofstream out(dir.path() / "short.pgm", std::ios::binary);
    out << "P5\n4 4\n255\nxx";
  }
  EXPECT_THROW(read_pgm8(dir.path() / "short.pgm", w, h), IoError);
  EXPECT_THROW(read_pgm8(dir.path() / "missing.pgm", w, h), IoError);
}

TEST(ImageIo, QuantizeRoundsHalfUp) {
  EXPECT_EQ(quantize8(0.0), 0);
  EXPECT_EQ(quantize8(1.0), 255);
  EXPECT_EQ(quantize8(0.5), 128);  // 127.5 rounds up
  EXPECT_EQ(quantize8(-0.2), 0);
  EXPECT_EQ(quantize8(1.7), 255);
}

TEST(Blob, HeaderAndPayloadRoundTrip) {
  TempDir dir("blob");
  xgrasp::Rng rng = make_rng(3);
  std::vector<NamedTensor> tensors;
  tensors.push_back({"alpha", testutil::random_tensor({2, 3}, rng)});
  tensors.push_back({"beta", testutil::random_tensor({4}, rng)});
  nlohmann::json meta;
  meta["kind"] = "test";
  meta["step"] = 42;
  save_blob(dir.path() / "x.blob", meta, tensors);

  Blob blob = load_blob(dir.path() / "x.blob");
  EXPECT_EQ(blob.meta.at("step").get<int>(), 42);
  ASSERT_EQ(blob.tensors.size(), 2u);
  EXPECT_EQ(blob.tensors[0].name, "alpha");
  EXPECT_EQ(testutil::max_abs_diff(blob.find("alpha"), tensors[0].tensor), 0.0);
  EXPECT_EQ(testutil::max_abs_diff(blob.find("beta"), tensors[1].tensor), 0.0);
  EXPECT_THROW(blob.find("gamma"), IoError);
}

TEST(Blob, PayloadIsLittleEndianDoubles) {
  TempDir dir("blob_le");
  save_blob(dir.path() / "one.blob", {}, {{"v", Tensor({1}, {1.0})}});
  std::ifstream in(dir.path() / "one.blob", std::ios::binary);
  std::string line;
  std::getline(in, line);
  char raw[8];
  in.read(raw, 8);
  // IEEE-754 1.0 little-endian: 00 00 00 00 00 00 f0 3f
  const unsigned char want[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(static_cast<unsigned char>(raw[i]), want[i]) << "byte " << i;
  }
}

TEST(Checkpoint, NetworkRoundTripPreservesForwardPass) {
  TempDir dir("net");
  NetworkParams net = build_network(4, 77);
  save_network(dir.path() / "net.ckpt", net, 123);
  NetworkParams back = load_network(dir.path() / "net.ckpt");
  EXPECT_EQ(back.input_channels, 4);
  xgrasp::Rng rng = make_rng(5);
  Tensor img = testutil::random_tensor({4, 16, 16}, rng, 0.0, 1.0);
  EXPECT_EQ(testutil::max_abs_diff(forward(net, img), forward(back, img)), 0.0);

  Blob blob = load_blob(dir.path() / "net.ckpt");
  EXPECT_EQ(blob.meta.at("optimizer_step").get<int>(), 123);
}

TEST(Checkpoint, ScoreVolumeRoundTrip) {
  TempDir dir("vol");
  xgrasp::Rng rng = make_rng(6);
  ScoreVolume vol;
  vol.scores = testutil::random_tensor({16, 8, 8}, rng, 0.0, 1.0);
  vol.modality = "depth-teacher";
  vol.cell_stride = 4;
  save_score_volume(dir.path() / "v.blob", vol);
  ScoreVolume back = load_score_volume(dir.path() / "v.blob");
  EXPECT_EQ(back.modality, "depth-teacher");
  EXPECT_EQ(back.cell_stride, 4);
  EXPECT_EQ(testutil::max_abs_diff(back.scores, vol.scores), 0.0);
}

TEST(Dataset, SceneDirRoundTripWithinQuantization) {
  TempDir dir("scene");
  xgrasp::Rng rng = make_rng(7);
  SceneSpec spec = sample_scene_spec(rng, {MaterialClass::Opaque, MaterialClass::Specular});
  Scene scene = generate_scene(spec, 0);
  PairedSample sample = render_pair(scene, kDefaultCameraHeight, 1.0, 99, DepthNoiseModel{}, 0.01,
                                    "scene_0");
  write_scene_dir(dir.path() / "scene_0", spec, 99, sample);

  DatasetEntry entry{"scene_0", "train", spec.all_opaque()};
  PairedSample back = load_scene_dir(dir.path() / "scene_0", entry);
  EXPECT_EQ(back.opaque_only, sample.opaque_only);
  ASSERT_TRUE(back.depth.same_shape(sample.depth));
  for (std::size_t i = 0; i < back.depth.size(); ++i) {
    EXPECT_LE(std::abs(back.depth[i] - sample.depth[i]), 0.0005 + 1e-12);  // half a millimeter
  }
  for (std::size_t i = 0; i < back.rgb.size(); ++i) {
    EXPECT_LE(std::abs(back.rgb[i] - sample.rgb[i]), 0.5 / 255.0 + 1e-12);
  }
  // sentinel readings survive the millimeter quantization exactly
  SceneSpec sp2 = sample_scene_spec(rng, {MaterialClass::Specular});
  Scene sc2 = generate_scene(sp2, 0);
  PairedSample s2 = render_pair(sc2, kDefaultCameraHeight, 1.0, 5);
  write_scene_dir(dir.path() / "scene_1", sp2, 5, s2);
  PairedSample b2 = load_scene_dir(dir.path() / "scene_1", DatasetEntry{"scene_1", "train", false});
  int sentinels_in = 0, sentinels_out = 0;
  for (std::size_t i = 0; i < s2.depth.size(); ++i) {
    sentinels_in += s2.depth[i] == kDepthSentinel ? 1 : 0;
    sentinels_out += b2.depth[i] == kDepthSentinel ? 1 : 0;
  }
  EXPECT_GT(sentinels_in, 0);
  EXPECT_EQ(sentinels_in, sentinels_out);

  SceneSpec spec_back = load_scene_spec(dir.path() / "scene_0");
  ASSERT_EQ(spec_back.objects.size(), spec.objects.size());
  EXPECT_EQ(spec_back.objects[0].material, spec.objects[0].material);
  EXPECT_EQ(spec_back.objects[0].dim_x, spec.objects[0].dim_x);
}

TEST(Dataset, ManifestRoundTripAndSplitLoading) {
  TempDir dir("manifest");
  DatasetManifest m;
  m.camera_height = 0.7;
  m.resolution = 0.01;
  m.entries.push_back({"scene_0", "train", true});
  m.entries.push_back({"scene_1", "train", false});
  m.entries.push_back({"scene_2", "val", true});
  write_manifest(dir.path(), m);
  DatasetManifest back = read_manifest(dir.path());
  EXPECT_EQ(back.camera_height, 0.7);
  ASSERT_EQ(back.entries.size(), 3u);
  EXPECT_EQ(back.entries[1].id, "scene_1");
  EXPECT_FALSE(back.entries[1].opaque_only);
  EXPECT_EQ(back.entries[2].split, "val");

  EXPECT_THROW(read_manifest(dir.path() / "nope"), IoError);
}
