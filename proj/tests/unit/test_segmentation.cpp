#include <gtest/gtest.h>

#include <set>

#include "planedepth/error.hpp"
#include "planedepth/segmentation.hpp"
#include "support.hpp"

namespace pd = planedepth;

namespace {

// Left half dark, right half bright, optionally shifted right by shift px.
pd::RgbImage halves(int w, int h, int shift = 0, pdtest::Rng* noise = nullptr) {
  pd::RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int base = x < w / 2 + shift ? 40 : 200;
      for (int c = 0; c < 3; ++c) {
        const int n = noise ? noise->integer(-3, 3) : 0;
        img.px(x, y)[c] = static_cast<std::uint8_t>(base + n);
      }
    }
  return img;
}

pd::SegmentationParams params() {
  pd::SegmentationParams p;
  p.k = 300.0;
  p.min_region_size = 20;
  return p;
}

}  // namespace

TEST(Segmentation, TwoFlatHalvesGiveTwoRegions) {
  pdtest::Rng rng(1);
  pd::VideoVolume v;
  v.frames = {halves(24, 16, 0, &rng)};
  const auto L = pd::segment_video(v, {}, params());
  EXPECT_EQ(L.region_count(), 2);
  EXPECT_NE(L.at(0, 0, 0), L.at(23, 15, 0));
  for (int y = 0; y < 16; ++y) {
    EXPECT_EQ(L.at(0, y, 0), L.at(11, y, 0));
    EXPECT_EQ(L.at(12, y, 0), L.at(23, y, 0));
  }
}

TEST(Segmentation, StaticVideoKeepsLabelsAcrossFrames) {
  pdtest::Rng rng(2);
  pd::VideoVolume v;
  for (int t = 0; t < 4; ++t) v.frames.push_back(halves(24, 16, 0, &rng));
  const auto L = pd::segment_video(v, {}, params());
  EXPECT_EQ(L.region_count(), 2);
  for (int t = 1; t < 4; ++t)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 24; ++x) EXPECT_EQ(L.at(x, y, t), L.at(x, y, 0));
}

TEST(Segmentation, FlowLinksMovingRegion) {
  // The boundary moves 2 px right per frame; flow says so.
  pd::VideoVolume v;
  std::vector<pd::FlowField> fwd;
  for (int t = 0; t < 3; ++t) v.frames.push_back(halves(32, 12, 2 * t - 4));
  for (int t = 0; t < 2; ++t) {
    pd::FlowField f(32, 12);
    std::fill(f.du.begin(), f.du.end(), 2.0f);
    fwd.push_back(f);
  }
  const auto L = pd::segment_video(v, fwd, params());
  EXPECT_EQ(L.region_count(), 2);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(L.at(0, 5, t), L.at(0, 5, 0));
    EXPECT_EQ(L.at(31, 5, t), L.at(31, 5, 0));
  }
}

TEST(Segmentation, HugeKMergesEverything) {
  pd::VideoVolume v;
  v.frames = {halves(16, 8)};
  auto p = params();
  p.k = 1e9;
  EXPECT_EQ(pd::segment_video(v, {}, p).region_count(), 1);
}

TEST(Segmentation, LabelsAreCompactAndValid) {
  pdtest::Rng rng(3);
  pd::VideoVolume v;
  for (int t = 0; t < 2; ++t) {
    pd::RgbImage img(20, 14);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.integer(0, 255));
    v.frames.push_back(img);
  }
  auto p = params();
  p.min_region_size = 5;
  const auto L = pd::segment_video(v, {}, p);
  EXPECT_NO_THROW(pd::validate_labels(L));
  const auto table = pd::region_index(L);
  for (const auto& r : table.regions) EXPECT_GT(r.pixel_count, 0);
}

TEST(Segmentation, RejectsWrongFlowCount) {
  pd::VideoVolume v;
  v.frames = {halves(8, 8), halves(8, 8)};
  std::vector<pd::FlowField> fwd(3, pd::FlowField(8, 8));
  EXPECT_THROW(pd::segment_video(v, fwd, params()), pd::Error);
}

TEST(Segmentation, CompactOrdersByFirstAppearance) {
  pd::SegmentationLabelMap L(2, 2, 1);
  L.labels = {7, 3, 3, 9};
  pd::compact_labels(L);
  EXPECT_EQ(L.labels, (std::vector<std::int32_t>{0, 1, 1, 2}));
}

TEST(Segmentation, ValidateRejectsGapsAndNegatives) {
  pd::SegmentationLabelMap L(2, 1, 1);
  L.labels = {0, 2};
  EXPECT_THROW(pd::validate_labels(L), pd::Error);
  L.labels = {0, -1};
  EXPECT_THROW(pd::validate_labels(L), pd::Error);
}

TEST(Segmentation, RegionIndexPixelsBoxesAndAdjacency) {
  // 0 0 1
  // 2 2 1   in frame 0; frame 1 only region 0.
  pd::SegmentationLabelMap L(3, 2, 2);
  L.labels = {0, 0, 1, 2, 2, 1, 0, 0, 0, 0, 0, 0};
  const auto t = pd::region_index(L);
  ASSERT_EQ(t.regions.size(), 3u);
  EXPECT_EQ(t.regions[0].pixel_count, 8);
  EXPECT_EQ(t.regions[1].pixels[0], (std::vector<std::int32_t>{2, 5}));
  EXPECT_FALSE(t.regions[1].present_in(1));
  EXPECT_EQ(t.regions[2].boxes[0].x0, 0);
  EXPECT_EQ(t.regions[2].boxes[0].x1, 1);
  EXPECT_EQ(t.regions[2].boxes[0].y0, 1);
  const std::set<std::pair<int, int>> expected = {{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(t.adjacency, expected);
}
