#include <gtest/gtest.h>

#include <cmath>

#include "planedepth/error.hpp"
#include "planedepth/geometry.hpp"
#include "support.hpp"

namespace pd = planedepth;
using pdtest::Vec3;

TEST(Geometry, DefaultIntrinsicsUseLongSideAndCenter) {
  const auto K = pd::CameraIntrinsics::defaults_for(640, 480);
  EXPECT_EQ(K.fu, 640.0);
  EXPECT_EQ(K.fv, 640.0);
  EXPECT_EQ(K.u0, 319.5);
  EXPECT_EQ(K.v0, 239.5);
}

TEST(Geometry, PrincipalPointRayIsOpticalAxis) {
  const auto K = pd::CameraIntrinsics::defaults_for(64, 48);
  const auto r = pd::pixel_ray(K, K.u0, K.v0);
  EXPECT_DOUBLE_EQ(r.direction.z(), 1.0);
  EXPECT_DOUBLE_EQ(r.direction.x(), 0.0);
}

TEST(Geometry, PixelRaysAreUnitAndPointThroughPixel) {
  pd::CameraIntrinsics K{100.0, 120.0, 30.0, 20.0};
  const auto rays = pd::pixel_rays(K, 7, 5);
  ASSERT_EQ(rays.size(), 35u);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) {
      const Vec3 r = rays[y * 7 + x].direction;
      EXPECT_NEAR(r.norm(), 1.0, 1e-15);
      EXPECT_NEAR(K.fu * r.x() / r.z() + K.u0, x, 1e-12);
      EXPECT_NEAR(K.fv * r.y() / r.z() + K.v0, y, 1e-12);
    }
}

TEST(Geometry, FrontoParallelPlaneDepthIsRayDistance) {
  // z = 10 plane; a ray at angle theta hits at distance 10 / cos(theta).
  const pd::PlaneParams plane{Vec3(0, 0, 0.1)};
  const Vec3 r = Vec3(0.3, 0.0, 1.0).normalized();
  EXPECT_NEAR(pd::plane_depth({r}, plane), 10.0 / r.z(), 1e-12);
}

TEST(Geometry, PlaneDepthBehindCameraThrows) {
  const pd::PlaneParams plane{Vec3(0, 0, -0.1)};
  try {
    pd::plane_depth({Vec3::UnitZ()}, plane);
    FAIL();
  } catch (const pd::Error& e) {
    EXPECT_EQ(e.kind(), pd::ErrorKind::BehindCamera);
  }
}

TEST(Geometry, ClampedDepthSaturatesAtMaxDepth) {
  EXPECT_EQ(pd::clamped_plane_depth({Vec3::UnitZ()}, {Vec3(0, 0, -1)}), pd::kMaxDepth);
  EXPECT_EQ(pd::clamped_plane_depth({Vec3::UnitZ()}, {Vec3(0, 0, 0)}), pd::kMaxDepth);
  EXPECT_EQ(pd::clamped_plane_depth({Vec3::UnitZ()}, {Vec3(0, 0, 1.0 / 200.0)}), pd::kMaxDepth);
  EXPECT_DOUBLE_EQ(pd::clamped_plane_depth({Vec3::UnitZ()}, {Vec3(0, 0, 0.05)}), 20.0);
}

TEST(Geometry, FitPlaneRecoversRandomPlanes) {
  pdtest::Rng rng(11);
  for (int n = 0; n < 200; ++n) {
    const auto plane = pdtest::random_plane(rng);
    std::vector<pd::Ray> rays(rng.integer(3, 30));
    std::vector<double> d(rays.size());
    for (std::size_t k = 0; k < rays.size(); ++k) {
      rays[k].direction = pdtest::random_ray(rng);
      d[k] = pd::plane_depth(rays[k], plane);
    }
    const auto fit = pd::fit_plane(rays, d);
    EXPECT_LT((fit.alpha - plane.alpha).norm() / plane.alpha.norm(), 1e-9);
  }
}

TEST(Geometry, FitPlaneRejectsDegenerateInput) {
  std::vector<pd::Ray> rays(2);
  std::vector<double> d = {1.0, 2.0};
  EXPECT_THROW(pd::fit_plane(rays, d), pd::Error);
  std::vector<pd::Ray> same(5, pd::Ray{Vec3::UnitZ()});
  std::vector<double> d5(5, 3.0);
  try {
    pd::fit_plane(same, d5);
    FAIL();
  } catch (const pd::Error& e) {
    EXPECT_EQ(e.kind(), pd::ErrorKind::DegenerateGeometry);
  }
  std::vector<pd::Ray> three = {{Vec3::UnitZ()}, {Vec3(0.1, 0, 1).normalized()}, {Vec3(0, 0.1, 1).normalized()}};
  std::vector<double> bad = {1.0, -2.0, 3.0};
  EXPECT_THROW(pd::fit_plane(three, bad), pd::Error);
}

TEST(Geometry, RenderDepthMatchesPerPixelPlaneDepth) {
  const auto K = pd::CameraIntrinsics::defaults_for(8, 6);
  std::vector<std::int32_t> labels(48, 0);
  for (int i = 24; i < 48; ++i) labels[i] = 1;
  std::vector<std::optional<pd::PlaneParams>> planes = {pd::PlaneParams{Vec3(0, 0, 0.1)},
                                                        pd::PlaneParams{Vec3(0, 0.5, 0.0)}};
  const auto d = pd::render_depth(labels, 8, 6, planes, K);
  const auto rays = pd::pixel_rays(K, 8, 6);
  for (int i = 0; i < 48; ++i) {
    EXPECT_TRUE(d.valid[i]);
    EXPECT_FLOAT_EQ(d.values[i], static_cast<float>(pd::clamped_plane_depth(rays[i], *planes[labels[i]])));
  }
}

TEST(Geometry, RenderDepthRequiresEveryPlane) {
  const auto K = pd::CameraIntrinsics::defaults_for(2, 2);
  std::vector<std::int32_t> labels = {0, 1, 1, 0};
  std::vector<std::optional<pd::PlaneParams>> planes = {pd::PlaneParams{Vec3(0, 0, 0.1)}, std::nullopt};
  EXPECT_THROW(pd::render_depth(labels, 2, 2, planes, K), pd::Error);
}

TEST(Geometry, InvalidIntrinsicsRejected) {
  pd::CameraIntrinsics K{0.0, 1.0, 0.0, 0.0};
  EXPECT_THROW(K.validate(), pd::Error);
  K = {1.0, std::nan(""), 0.0, 0.0};
  EXPECT_THROW(K.validate(), pd::Error);
}
