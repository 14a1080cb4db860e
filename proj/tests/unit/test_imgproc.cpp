#include <gtest/gtest.h>

#include <cmath>

#include "planedepth/error.hpp"
#include "planedepth/imgproc.hpp"
#include "planedepth/raster.hpp"
#include "support.hpp"

namespace pd = planedepth;

namespace {
pd::GrayImage ramp(int w, int h, double ax, double ay) {
  pd::GrayImage g(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g.at(x, y) = static_cast<float>(ax * x + ay * y);
  return g;
}
}  // namespace

TEST(Imgproc, SobelRespondsWithUnitSlopeOnRamp) {
  const auto g = ramp(20, 20, 1.0, 0.0);
  for (int size : {3, 5, 7}) {
    const auto dx = pd::filter2d(g, pd::sobel_x(size));
    const auto dy = pd::filter2d(g, pd::sobel_y(size));
    EXPECT_NEAR(dx.at(10, 10), 1.0, 1e-5) << size;
    EXPECT_NEAR(dy.at(10, 10), 0.0, 1e-5) << size;
  }
  const auto gy = ramp(20, 20, 0.0, 2.0);
  EXPECT_NEAR(pd::filter2d(gy, pd::sobel_y(5)).at(10, 10), 2.0, 1e-5);
}

TEST(Imgproc, SobelSizeMustBeOdd357) {
  EXPECT_THROW(pd::sobel_x(4), pd::Error);
  EXPECT_THROW(pd::sobel_x(9), pd::Error);
}

TEST(Imgproc, GaussianBlurPreservesConstantAndMean) {
  pd::GrayImage c(9, 7, 42.0f);
  const auto b = pd::gaussian_blur(c, 1.5);
  for (float v : b.values) EXPECT_NEAR(v, 42.0f, 1e-4);
  // An impulse spreads symmetrically.
  pd::GrayImage imp(21, 21, 0.0f);
  imp.at(10, 10) = 1.0f;
  const auto s = pd::gaussian_blur(imp, 2.0);
  EXPECT_NEAR(s.at(8, 10), s.at(12, 10), 1e-7);
  EXPECT_NEAR(s.at(10, 8), s.at(10, 12), 1e-7);
  double sum = 0.0;
  for (float v : s.values) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-5);
}

TEST(Imgproc, BilinearSampleInterpolatesAndClamps) {
  const auto g = ramp(5, 4, 2.0, 10.0);
  EXPECT_NEAR(pd::sample_bilinear(g, 1.5, 2.25), 2.0 * 1.5 + 10.0 * 2.25, 1e-5);
  EXPECT_FLOAT_EQ(pd::sample_bilinear(g, -3.0, -1.0), g.at(0, 0));
  EXPECT_FLOAT_EQ(pd::sample_bilinear(g, 9.0, 9.0), g.at(4, 3));
  pd::RgbImage rgb(2, 1);
  rgb.px(0, 0)[1] = 10;
  rgb.px(1, 0)[1] = 30;
  EXPECT_DOUBLE_EQ(pd::sample_bilinear_rgb(rgb, 0.25, 0.0, 1), 15.0);
}

TEST(Imgproc, DownsampleHalvesRoundingUp) {
  const auto d = pd::downsample(pd::GrayImage(9, 6, 1.0f));
  EXPECT_EQ(d.width, 5);
  EXPECT_EQ(d.height, 3);
}

TEST(Imgproc, ResizeOfRampStaysLinear) {
  const auto g = ramp(8, 8, 1.0, 0.0);
  const auto r = pd::resize_bilinear(g, 16, 16);
  // Pixel-center sampling: output x maps to (x + 0.5) / 2 - 0.5.
  EXPECT_NEAR(r.at(5, 3), (5 + 0.5) / 2.0 - 0.5, 1e-5);
}

TEST(Imgproc, SeparableMatchesFull2d) {
  pdtest::Rng rng(3);
  pd::GrayImage g(11, 9);
  for (auto& v : g.values) v = static_cast<float>(rng.uniform(0, 255));
  const std::vector<double> row = {0.25, 0.5, 0.25}, col = {-1.0, 0.0, 1.0};
  pd::Kernel k{1, {}};
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) k.taps.push_back(col[dy + 1] * row[dx + 1]);
  const auto a = pd::filter_separable(g, row, col);
  const auto b = pd::filter2d(g, k);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-3);
}

TEST(Raster, GrayConversionAndVideoValidation) {
  pd::RgbImage img(1, 1);
  img.px(0, 0)[0] = 255;
  const auto g = pd::to_gray(img);
  EXPECT_GT(g.values[0], 0.0f);
  EXPECT_LT(g.values[0], 255.0f);
  pd::VideoVolume v;
  EXPECT_THROW(v.validate(), pd::Error);
  v.frames = {pd::RgbImage(2, 2), pd::RgbImage(3, 2)};
  EXPECT_THROW(v.validate(), pd::Error);
}

TEST(Raster, SizeMismatchNamesBothSizes) {
  try {
    pd::require_same_size(3, 4, 5, 6, "depth");
    FAIL();
  } catch (const pd::Error& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("3x4"), std::string::npos) << m;
    EXPECT_NE(m.find("5x6"), std::string::npos) << m;
  }
}
