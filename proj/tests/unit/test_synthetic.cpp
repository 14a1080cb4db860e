#include <gtest/gtest.h>

#include "planedepth/error.hpp"
#include "planedepth/synthetic.hpp"

namespace pd = planedepth;

TEST(Synthetic, RandomScenesMeetTheContract) {
  pd::RandomSceneOptions o;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto s = pd::random_scene(seed, 6, o);
    const auto v = pd::generate_scene(s, 6);
    EXPECT_EQ(pd::check_scene_contract(s, v, o.min_pixels), "") << "seed " << seed;
    EXPECT_GE(static_cast<int>(s.regions.size()), o.min_regions);
    EXPECT_LE(static_cast<int>(s.regions.size()), o.max_regions);
    EXPECT_EQ(v.video.frame_count(), 6);
    EXPECT_EQ(v.gc.size(), 6u);
  }
}

TEST(Synthetic, Deterministic) {
  const auto a = pd::generate_scene(pd::random_scene(5, 4), 4);
  const auto b = pd::generate_scene(pd::random_scene(5, 4), 4);
  EXPECT_EQ(a.labels.labels, b.labels.labels);
  EXPECT_EQ(a.video.frames[3].data, b.video.frames[3].data);
  EXPECT_EQ(a.depth[2].values, b.depth[2].values);
}

TEST(Synthetic, DepthFollowsRegionPlanes) {
  const auto v = pd::generate_scene(pd::random_scene(11, 5), 5);
  for (int t = 0; t < 5; ++t)
    for (int y = 0; y < v.labels.height; y += 7)
      for (int x = 0; x < v.labels.width; x += 5) {
        const int r = v.labels.at(x, y, t);
        ASSERT_TRUE(v.planes[t][r].has_value());
        const double expect = 1.0 / pd::pixel_ray(v.K, x, y).direction.dot(v.planes[t][r]->alpha);
        EXPECT_NEAR(v.depth[t].values[static_cast<std::size_t>(y) * v.labels.width + x], expect, 1e-4 * expect);
      }
}

TEST(Synthetic, NonOccludingPairsShareAPlane) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const auto v = pd::generate_scene(pd::random_scene(seed, 3), 3);
    for (const auto& o : v.occlusion) {
      if (o.label != 1) continue;
      const auto& a = v.planes[o.frame][o.i]->alpha;
      const auto& b = v.planes[o.frame][o.j]->alpha;
      EXPECT_LT((a - b).norm(), 1e-9 * a.norm());
    }
  }
}

TEST(Synthetic, HandBuiltSceneAndErrors) {
  pd::SyntheticScene s;
  s.width = 16;
  s.height = 12;
  s.K = pd::CameraIntrinsics::defaults_for(16, 12);
  pd::SceneRegion back;
  back.name = "back";
  back.plane.alpha = pd::Vec3(0, 0, 1.0 / 30.0);
  s.regions.push_back(back);
  const auto v = pd::generate_scene(s, 2);
  EXPECT_NEAR(v.depth[0].values[0], 30.0 / pd::pixel_ray(s.K, 0, 0).direction.z(), 1e-4);
  s.regions[0].x0 = 0;
  s.regions[0].x1 = 4;
  EXPECT_THROW(pd::generate_scene(s, 2), pd::Error);  // pixels hit nothing
  EXPECT_THROW(pd::generate_scene(s, 0), pd::Error);
  pd::RandomSceneOptions bad;
  bad.min_regions = 5;
  bad.max_regions = 3;
  EXPECT_THROW(pd::random_scene(0, 2, bad), pd::Error);
}
