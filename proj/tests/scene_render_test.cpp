#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "xgrasp/render.hpp"
#include "xgrasp/scene.hpp"

using namespace xgrasp;

namespace {

SceneSpec one_box_spec(double dim_x = 0.04, double dim_y = 0.04, double height = 0.05,
                       MaterialClass mat = MaterialClass::Opaque) {
  SceneSpec spec;
  SceneObject box;
  box.shape = ShapeKind::Box;
  box.x = 0.16;
  box.y = 0.16;
  box.dim_x = dim_x;
  box.dim_y = dim_y;
  box.height = height;
  box.material = mat;
  box.albedo = {0.2, 0.5, 0.8};
  spec.objects.push_back(box);
  return spec;
}

DepthNoiseModel no_noise() {
  DepthNoiseModel m;
  m.gaussian_sigma = 0.0;
  return m;
}

}  // namespace

TEST(GenerateScene, EmptySpecIsAllTable) {
  Scene s = generate_scene(SceneSpec{}, 1);
  EXPECT_EQ(s.width(), 32);
  EXPECT_EQ(s.height(), 32);
  for (std::size_t i = 0; i < s.heightmap.size(); ++i) {
    EXPECT_EQ(s.heightmap[i], 0.0);
    EXPECT_EQ(s.material[i], MaterialClass::Opaque);
    EXPECT_EQ(s.object_id[i], -1);
  }
}

TEST(GenerateScene, CenteredBoxPlateauAreaMatchesFootprint) {
  Scene s = generate_scene(one_box_spec(), 1);
  int plateau = 0;
  for (std::size_t i = 0; i < s.heightmap.size(); ++i) {
    if (s.heightmap[i] > 0.0) {
      EXPECT_EQ(s.heightmap[i], 0.05);
      ++plateau;
    }
  }
  // 0.04 x 0.04 m footprint at 0.01 m/px
  EXPECT_EQ(plateau, 16);
}

TEST(GenerateScene, DeterministicForSpecAndSeed) {
  xgrasp::Rng rng1 = make_rng(5), rng2 = make_rng(5);
  SceneSpec a = sample_scene_spec(rng1, {MaterialClass::Opaque, MaterialClass::Opaque});
  SceneSpec b = sample_scene_spec(rng2, {MaterialClass::Opaque, MaterialClass::Opaque});
  Scene sa = generate_scene(a, 7), sb = generate_scene(b, 7);
  EXPECT_EQ(testutil::max_abs_diff(sa.heightmap, sb.heightmap), 0.0);
}

TEST(GenerateScene, RejectsOutOfWorkspaceObject) {
  SceneSpec spec = one_box_spec();
  spec.objects[0].x = 0.31;  // bounding radius crosses the wall
  EXPECT_THROW(generate_scene(spec, 1), ValidationError);
  spec = one_box_spec();
  spec.objects[0].height = 0.2;
  EXPECT_THROW(generate_scene(spec, 1), ValidationError);
}

TEST(GenerateScene, OverlapCompositesToMax) {
  SceneSpec spec = one_box_spec();
  SceneObject tall = spec.objects[0];
  tall.height = 0.09;
  tall.dim_x = tall.dim_y = 0.02;
  spec.objects.push_back(tall);
  Scene s = generate_scene(spec, 1);
  double m = 0.0;
  for (std::size_t i = 0; i < s.heightmap.size(); ++i) m = std::max(m, s.heightmap[i]);
  EXPECT_EQ(m, 0.09);
}

TEST(RenderDepth, NoiseFreeOpaqueIsExactlyCameraMinusHeight) {
  Scene s = generate_scene(one_box_spec(), 1);
  Tensor d = render_depth(s, kDefaultCameraHeight, 3, no_noise());
  for (int py = 0; py < s.height(); ++py) {
    for (int px = 0; px < s.width(); ++px) {
      EXPECT_EQ(d.at3(0, py, px), kDefaultCameraHeight - s.height_at(py, px));
    }
  }
  // and the heightmap is recoverable to round-off
  Tensor h = observed_height(d, kDefaultCameraHeight);
  EXPECT_LE(testutil::max_abs_diff(h, s.heightmap), 1e-12);
}

TEST(RenderDepth, RequiresCameraAboveScene) {
  Scene s = generate_scene(one_box_spec(), 1);
  EXPECT_THROW(render_depth(s, 0.04, 3), ContractError);
}

TEST(RenderDepth, TransparentPixelsMostlyReadTable) {
  Scene s = generate_scene(one_box_spec(0.06, 0.06, 0.05, MaterialClass::Transparent), 1);
  int object_px = 0, near_table = 0;
  for (int seed = 0; seed < 120; ++seed) {
    Tensor d = render_depth(s, kDefaultCameraHeight, static_cast<std::uint64_t>(seed));
    for (std::size_t i = 0; i < s.material.size(); ++i) {
      if (s.object_id[i] < 0) continue;
      ++object_px;
      if (std::abs(d[i] - kDefaultCameraHeight) <= 0.005) ++near_table;
    }
  }
  EXPECT_GE(static_cast<double>(near_table) / object_px, 0.85);
}

TEST(RenderDepth, TransparentHeightUnderestimatesTrueHeight) {
  Scene s = generate_scene(one_box_spec(0.06, 0.06, 0.05, MaterialClass::Transparent), 1);
  int object_px = 0, under = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Tensor h = observed_height(render_depth(s, kDefaultCameraHeight, 1000 + seed),
                               kDefaultCameraHeight);
    for (std::size_t i = 0; i < s.material.size(); ++i) {
      if (s.object_id[i] < 0) continue;
      ++object_px;
      if (h[i] < s.heightmap[i]) ++under;
    }
  }
  EXPECT_GE(static_cast<double>(under) / object_px, 0.85);
}

TEST(RenderDepth, SpecularPixelsMostlyDropOut) {
  Scene s = generate_scene(one_box_spec(0.06, 0.06, 0.05, MaterialClass::Specular), 1);
  int object_px = 0, sentinel = 0;
  for (int seed = 0; seed < 120; ++seed) {
    Tensor d = render_depth(s, kDefaultCameraHeight, 500 + static_cast<std::uint64_t>(seed));
    for (std::size_t i = 0; i < s.material.size(); ++i) {
      if (s.object_id[i] < 0) continue;
      ++object_px;
      if (d[i] == kDepthSentinel) ++sentinel;
    }
  }
  EXPECT_GE(static_cast<double>(sentinel) / object_px, 0.60);
}

TEST(RenderRgb, EmptySceneIsUniformTableColor) {
  Scene s = generate_scene(SceneSpec{}, 1);
  Tensor rgb = render_rgb(s, 1.0, 3, 0.0);
  for (int py = 0; py < s.height(); ++py) {
    for (int px = 0; px < s.width(); ++px) {
      EXPECT_EQ(rgb.at3(0, py, px), s.spec.table_color.r);
      EXPECT_EQ(rgb.at3(1, py, px), s.spec.table_color.g);
      EXPECT_EQ(rgb.at3(2, py, px), s.spec.table_color.b);
    }
  }
}

TEST(RenderRgb, IllumScalesLinearlyBeforeClamp) {
  Scene s = generate_scene(one_box_spec(), 1);
  Tensor full = render_rgb(s, 1.0, 9, 0.0);
  Tensor half = render_rgb(s, 0.5, 9, 0.0);
  for (std::size_t i = 0; i < full.size(); ++i) {
    EXPECT_NEAR(half[i], 0.5 * full[i], 1e-12);
  }
}

TEST(RenderRgb, RejectsIllumOutsideRange) {
  Scene s = generate_scene(SceneSpec{}, 1);
  EXPECT_THROW(render_rgb(s, 0.1, 1), ContractError);
  EXPECT_THROW(render_rgb(s, 2.5, 1), ContractError);
}

TEST(RenderRgb, TransparentRimExceedsTableIntensity) {
  Scene s = generate_scene(one_box_spec(0.05, 0.05, 0.05, MaterialClass::Transparent), 1);
  Tensor rgb = render_rgb(s, 1.0, 11, 0.0);
  const double table_i = s.spec.table_color.intensity();
  int rim_px = 0;
  for (int py = 1; py < s.height() - 1; ++py) {
    for (int px = 1; px < s.width() - 1; ++px) {
      const std::size_t idx = static_cast<std::size_t>(py) * s.width() + px;
      if (s.object_id[idx] < 0) continue;
      bool edge = false;
      for (auto [dy, dx] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        if (s.object_id[static_cast<std::size_t>(py + dy) * s.width() + px + dx] < 0) edge = true;
      }
      if (!edge) continue;
      ++rim_px;
      const double inten = (rgb.at3(0, py, px) + rgb.at3(1, py, px) + rgb.at3(2, py, px)) / 3.0;
      EXPECT_GE(inten - table_i, 0.3);
    }
  }
  EXPECT_GT(rim_px, 0);
}

// Object outlines stay visible in RGB for every material class: somewhere on
// the silhouette the intensity jump across the boundary is at least 0.3.
TEST(RenderRgb, SilhouetteDetectableForAllMaterials) {
  for (MaterialClass mat :
       {MaterialClass::Opaque, MaterialClass::Transparent, MaterialClass::Specular}) {
    for (int albedo_seed = 0; albedo_seed < 8; ++albedo_seed) {
      SceneSpec spec = one_box_spec(0.05, 0.05, 0.05, mat);
      xgrasp::Rng rng = make_rng(777 + albedo_seed);
      spec.objects[0].albedo = sample_albedo(rng);
      Scene s = generate_scene(spec, 1);
      Tensor rgb = render_rgb(s, 1.0, 13, 0.0);
      auto inten = [&](int py, int px) {
        return (rgb.at3(0, py, px) + rgb.at3(1, py, px) + rgb.at3(2, py, px)) / 3.0;
      };
      double best = 0.0;
      for (int py = 1; py < s.height() - 1; ++py) {
        for (int px = 1; px < s.width() - 1; ++px) {
          const std::size_t idx = static_cast<std::size_t>(py) * s.width() + px;
          if (s.object_id[idx] < 0) continue;
          for (auto [dy, dx] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
            if (s.object_id[static_cast<std::size_t>(py + dy) * s.width() + px + dx] < 0) {
              best = std::max(best, std::abs(inten(py, px) - inten(py + dy, px + dx)));
            }
          }
        }
      }
      EXPECT_GE(best, 0.3) << material_name(mat) << " albedo seed " << albedo_seed;
    }
  }
}

TEST(Augment, ProducesThirtyTwoVariants) {
  Scene s = generate_scene(one_box_spec(), 1);
  PairedSample p = render_pair(s, kDefaultCameraHeight, 1.0, 21);
  std::vector<PairedSample> variants = augment_pair(p, 42);
  EXPECT_EQ(variants.size(), 32u);
}

TEST(Augment, ZeroRotationNoJitterIsIdentity) {
  Scene s = generate_scene(one_box_spec(), 1);
  PairedSample p = render_pair(s, kDefaultCameraHeight, 1.0, 21);
  PairedSample t = transform_pair(p, 0, false, ColorJitter{});
  EXPECT_EQ(testutil::max_abs_diff(t.depth, p.depth), 0.0);
  EXPECT_EQ(testutil::max_abs_diff(t.rgb, p.rgb), 0.0);
}

TEST(Augment, DepthAndRgbStayCoRegistered) {
  Scene s = generate_scene(one_box_spec(), 1);
  PairedSample p = render_pair(s, kDefaultCameraHeight, 1.0, 21);
  const int h = p.depth.dim(1), w = p.depth.dim(2);
  for (int steps : {1, 5, 8, 19}) {
    for (bool flip : {false, true}) {
      PairedSample t = transform_pair(p, steps, flip, ColorJitter{});
      // recompute the inverse map and compare both channels per pixel
      const double angle = steps * kThetaBinWidth;
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int oy = 0; oy < h; ++oy) {
        for (int ox = 0; ox < w; ++ox) {
          double dx = (ox + 0.5) - 0.5 * w;
          const double dy = (oy + 0.5) - 0.5 * h;
          if (flip) dx = -dx;
          const int sx = static_cast<int>(std::floor(ca * dx + sa * dy + 0.5 * w));
          const int sy = static_cast<int>(std::floor(-sa * dx + ca * dy + 0.5 * h));
          if (sx < 0 || sx >= w || sy < 0 || sy >= h) continue;
          EXPECT_EQ(t.depth.at3(0, oy, ox), p.depth.at3(0, sy, sx));
          for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(t.rgb.at3(c, oy, ox), p.rgb.at3(c, sy, sx));
          }
        }
      }
    }
  }
}

TEST(Augment, DepthValuesComeOnlyFromTheSourceImage) {
  // geometric transform only: every depth value in the variant already
  // existed somewhere in the source (or is the fill), never rescaled
  Scene s = generate_scene(one_box_spec(), 1);
  PairedSample p = render_pair(s, kDefaultCameraHeight, 1.0, 33);
  std::vector<double> source(p.depth.data(), p.depth.data() + p.depth.size());
  std::sort(source.begin(), source.end());
  for (const PairedSample& v : augment_pair(p, 9)) {
    for (std::size_t i = 0; i < v.depth.size(); ++i) {
      EXPECT_TRUE(std::binary_search(source.begin(), source.end(), v.depth[i]));
    }
  }
}

TEST(FilterOpaque, KeepsOnlyOpaquePairsInOrder) {
  std::vector<PairedSample> dataset;
  std::vector<bool> flags = {true, false, true, true, false, false, true, false, false, false};
  for (std::size_t i = 0; i < flags.size(); ++i) {
    PairedSample s;
    s.depth = Tensor::zeros({1, 2, 2});
    s.rgb = Tensor::zeros({3, 2, 2});
    s.opaque_only = flags[i];
    s.scene_id = "s" + std::to_string(i);
    dataset.push_back(s);
  }
  std::vector<PairedSample> got = filter_opaque(dataset);
  // independent scan of the flag list
  std::vector<std::string> want;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) want.push_back("s" + std::to_string(i));
  }
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].scene_id, want[i]);
    EXPECT_TRUE(got[i].opaque_only);
  }

  std::vector<PairedSample> all_opaque = filter_opaque(got);
  EXPECT_EQ(all_opaque.size(), got.size());
}

TEST(PairedSample, OpaqueOnlyFlagTracksSceneMaterials) {
  Scene opaque = generate_scene(one_box_spec(), 1);
  Scene trans = generate_scene(one_box_spec(0.04, 0.04, 0.05, MaterialClass::Transparent), 1);
  EXPECT_TRUE(render_pair(opaque, kDefaultCameraHeight, 1.0, 2).opaque_only);
  EXPECT_FALSE(render_pair(trans, kDefaultCameraHeight, 1.0, 2).opaque_only);
}

TEST(Scene, RemoveObjectShrinksMaterialVolume) {
  SceneSpec spec = one_box_spec();
  SceneObject second = spec.objects[0];
  second.x = 0.08;
  second.y = 0.08;
  spec.objects.push_back(second);
  Scene s = generate_scene(spec, 1);
  auto volume = [&] {
    double v = 0.0;
    for (std::size_t i = 0; i < s.heightmap.size(); ++i) v += s.heightmap[i];
    return v;
  };
  const double before = volume();
  s.remove_object(1);
  EXPECT_LT(volume(), before);
  EXPECT_EQ(s.alive_count(), 1);
}
