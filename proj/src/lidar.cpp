#include "planedepth/lidar.hpp"

#include <cmath>
#include <random>

#include <Eigen/LU>

namespace planedepth {

void Extrinsics::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorKind::NonFinite, "extrinsics contain non-finite values");
  }
  if (!(rotation.transpose() * rotation).isApprox(Eigen::Matrix3d::Identity(), 1e-9) ||
      std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "extrinsic rotation must be orthonormal with determinant 1");
  }
}

std::vector<LidarHit> project_lidar(const LidarScan& scan, const Extrinsics& extrinsics, const CameraIntrinsics& K,
                                    int width, int height) {
  extrinsics.validate();
  K.validate();
  std::vector<LidarHit> hits;
  for (const Vec3& x : scan.points) {
    if (!x.allFinite() || x.norm() > kMaxDepth) continue;
    const Vec3 c = extrinsics.rotation * x + extrinsics.translation;
    if (!(c.z() > 0.0)) continue;
    const double u = K.fu * c.x() / c.z() + K.u0;
    const double v = K.fv * c.y() / c.z() + K.v0;
    const double px = std::round(u), py = std::round(v);
    if (px < 0 || py < 0 || px >= width || py >= height) continue;
    hits.push_back({u, v, c.norm()});
  }
  return hits;
}

std::vector<DepthMap> segment_ground_truth(std::span<const std::vector<LidarHit>> hits_per_frame,
                                           const SegmentationLabelMap& labels, int window) {
  if (window < 1) throw Error(ErrorKind::InvalidArgument, "segment_ground_truth: window must be >= 1");
  if (static_cast<int>(hits_per_frame.size()) != labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "segment_ground_truth: one hit list per labeled frame required");
  }
  const int T = labels.frames, W = labels.width, H = labels.height;
  const int R = labels.region_count();
  // Per frame, per region: sum and count of hits landing in that frame.
  std::vector<std::vector<double>> sum(T, std::vector<double>(R, 0.0));
  std::vector<std::vector<std::int64_t>> count(T, std::vector<std::int64_t>(R, 0));
  for (int t = 0; t < T; ++t)
    for (const auto& h : hits_per_frame[t]) {
      const int x = static_cast<int>(std::round(h.u)), y = static_cast<int>(std::round(h.v));
      if (x < 0 || y < 0 || x >= W || y >= H) continue;
      const int r = labels.at(x, y, t);
      sum[t][r] += h.depth;
      ++count[t][r];
    }
  const int before = window / 2, after = (window - 1) / 2;
  std::vector<DepthMap> out;
  for (int t = 0; t < T; ++t) {
    std::vector<double> s(R, 0.0);
    std::vector<std::int64_t> n(R, 0);
    for (int f = std::max(0, t - before); f <= std::min(T - 1, t + after); ++f)
      for (int r = 0; r < R; ++r) {
        s[r] += sum[f][r];
        n[r] += count[f][r];
      }
    DepthMap d(W, H);
    const auto frame = labels.frame(t);
    for (std::size_t p = 0; p < frame.size(); ++p) {
      const int r = frame[p];
      if (n[r] == 0) continue;
      d.values[p] = static_cast<float>(s[r] / static_cast<double>(n[r]));
      d.valid[p] = 1;
    }
    out.push_back(std::move(d));
  }
  return out;
}

LidarScan scan_from_planes(std::span<const std::int32_t> labels, int width, int height,
                           std::span<const std::optional<PlaneParams>> planes, const CameraIntrinsics& K,
                           const Extrinsics& extrinsics, int stride, std::uint64_t seed) {
  extrinsics.validate();
  if (stride < 1) throw Error(ErrorKind::InvalidArgument, "scan_from_planes: stride must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.45, 0.45);
  const Eigen::Matrix3d Rt = extrinsics.rotation.transpose();
  LidarScan scan;
  for (int y = 0; y < height; y += stride)
    for (int x = 0; x < width; x += stride) {
      const int r = labels[static_cast<std::size_t>(y) * width + x];
      if (r < 0 || static_cast<std::size_t>(r) >= planes.size() || !planes[r]) {
        throw Error(ErrorKind::InconsistentInput, "scan_from_planes: region without plane");
      }
      const Ray ray = pixel_ray(K, x + jitter(rng), y + jitter(rng));
      const double s = ray.direction.dot(planes[r]->alpha);
      if (!(s > 0.0) || 1.0 / s > kMaxDepth) continue;
      const Vec3 c = ray.direction / s;
      scan.points.push_back(Rt * (c - extrinsics.translation));
    }
  return scan;
}

}  // namespace planedepth
