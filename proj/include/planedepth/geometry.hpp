#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "planedepth/raster.hpp"

namespace planedepth {

using Vec3 = Eigen::Vector3d;

/// Far limit of the depth range; also where sky and behind-camera pixels clamp.
inline constexpr double kMaxDepth = 80.0;

/// Pinhole intrinsics. Rotation is identity and translation zero throughout.
struct CameraIntrinsics {
  double fu = 1.0;
  double fv = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  void validate() const;
  Eigen::Matrix3d matrix() const;

  /// f = max(width, height), principal point at the image center.
  static CameraIntrinsics defaults_for(int width, int height);
};

/// Unit-norm viewing direction.
struct Ray {
  Vec3 direction = Vec3::UnitZ();
};

/// A plane {X : alpha^T X = 1}; depth along a unit ray r is 1 / (r^T alpha).
struct PlaneParams {
  Vec3 alpha = Vec3::Zero();

  Vec3 normal() const { return alpha.normalized(); }
};

Ray pixel_ray(const CameraIntrinsics& K, double u, double v);

/// Rays for every pixel of a width x height frame, row-major.
std::vector<Ray> pixel_rays(const CameraIntrinsics& K, int width, int height);

/// Throws ErrorKind::BehindCamera when r^T alpha <= 0.
double plane_depth(const Ray& ray, const PlaneParams& plane);

/// Least squares over sum (r^T alpha - 1/d)^2. Needs three rays of full rank.
PlaneParams fit_plane(std::span<const Ray> rays, std::span<const double> depths);

/// Clamped depth used by rendering: non-positive r^T alpha or depth beyond
/// kMaxDepth both map to kMaxDepth.
double clamped_plane_depth(const Ray& ray, const PlaneParams& plane);

/// Renders one label frame. planes[id] must hold a value for every id present.
DepthMap render_depth(std::span<const std::int32_t> labels, int width, int height,
                      std::span<const std::optional<PlaneParams>> planes,
                      const CameraIntrinsics& K);

}  // namespace planedepth
