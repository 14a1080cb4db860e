#include "planedepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace planedepth {

void CameraIntrinsics::validate() const {
  if (!(fu > 0.0) || !(fv > 0.0) || !std::isfinite(fu) || !std::isfinite(fv)) {
    throw Error(ErrorKind::InvalidArgument, "camera focal lengths must be positive and finite");
  }
  if (!std::isfinite(u0) || !std::isfinite(v0)) {
    throw Error(ErrorKind::InvalidArgument, "camera principal point must be finite");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fu, 0.0, u0, 0.0, fv, v0, 0.0, 0.0, 1.0;
  return K;
}

CameraIntrinsics CameraIntrinsics::defaults_for(int width, int height) {
  const double f = std::max(width, height);
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1)};
}

Ray pixel_ray(const CameraIntrinsics& K, double u, double v) {
  Vec3 d((u - K.u0) / K.fu, (v - K.v0) / K.fv, 1.0);
  return {d / d.norm()};
}

std::vector<Ray> pixel_rays(const CameraIntrinsics& K, int width, int height) {
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) rays.push_back(pixel_ray(K, x, y));
  return rays;
}

double plane_depth(const Ray& ray, const PlaneParams& plane) {
  const double s = ray.direction.dot(plane.alpha);
  if (!(s > 0.0)) {
    throw Error(ErrorKind::BehindCamera,
                "plane is behind the camera along this ray (r^T alpha = " + std::to_string(s) + ")");
  }
  return 1.0 / s;
}

double clamped_plane_depth(const Ray& ray, const PlaneParams& plane) {
  const double s = ray.direction.dot(plane.alpha);
  if (!(s > 0.0)) return kMaxDepth;
  const double d = 1.0 / s;
  return d > kMaxDepth ? kMaxDepth : d;
}

PlaneParams fit_plane(std::span<const Ray> rays, std::span<const double> depths) {
  if (rays.size() != depths.size()) {
    throw Error(ErrorKind::DimensionMismatch, "fit_plane: ray and depth counts differ");
  }
  if (rays.size() < 3) {
    throw Error(ErrorKind::DegenerateGeometry, "fit_plane: need at least 3 rays");
  }
  const auto n = static_cast<Eigen::Index>(rays.size());
  Eigen::MatrixX3d A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(depths[i] > 0.0) || !std::isfinite(depths[i])) {
      throw Error(ErrorKind::InvalidArgument, "fit_plane: depths must be positive and finite");
    }
    A.row(i) = rays[i].direction.transpose();
    b(i) = 1.0 / depths[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(A);
  // Relative to the largest pivot; rays from a real frustum stay far above this.
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw Error(ErrorKind::DegenerateGeometry, "fit_plane: rays do not span rank 3");
  }
  return {qr.solve(b)};
}

DepthMap render_depth(std::span<const std::int32_t> labels, int width, int height,
                      std::span<const std::optional<PlaneParams>> planes,
                      const CameraIntrinsics& K) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::DimensionMismatch, "render_depth: label frame size mismatch");
  }
  DepthMap out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const std::int32_t id = labels[i];
      if (id < 0 || static_cast<std::size_t>(id) >= planes.size() || !planes[id]) {
        throw Error(ErrorKind::InconsistentInput,
                    "render_depth: no plane for region " + std::to_string(id));
      }
      out.values[i] = static_cast<float>(clamped_plane_depth(pixel_ray(K, x, y), *planes[id]));
      out.valid[i] = 1;
    }
  }
  return out;
}

}  // namespace planedepth
