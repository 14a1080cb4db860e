#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "planedepth/geometry.hpp"

namespace planedepth {

struct LidarScan {
  std::vector<Vec3> points;  // sensor coordinates, meters
  double timestamp = 0.0;
};

/// Sensor-to-camera transform: x_cam = R x + t.
struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws unless R is orthonormal with determinant 1 (within 1e-9).
  void validate() const;
};

struct LidarHit {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // ray distance in the camera frame
};

/// Keeps points within kMaxDepth of the sensor, in front of the camera and
/// landing on a pixel of the width x height frame.
std::vector<LidarHit> project_lidar(const LidarScan& scan, const Extrinsics& extrinsics, const CameraIntrinsics& K,
                                    int width, int height);

/// Mean hit depth per region slice over the frames [t-2, t+2] (for
/// window 5), hits attributed by the label at their own frame and rounded
/// pixel. Regions without hits are invalid.
std::vector<DepthMap> segment_ground_truth(std::span<const std::vector<LidarHit>> hits_per_frame,
                                           const SegmentationLabelMap& labels, int window = 5);

/// Samples every stride-th pixel at a jittered sub-pixel position, hits the
/// pixel's region plane and returns the points in sensor coordinates.
LidarScan scan_from_planes(std::span<const std::int32_t> labels, int width, int height,
                           std::span<const std::optional<PlaneParams>> planes, const CameraIntrinsics& K,
                           const Extrinsics& extrinsics, int stride, std::uint64_t seed);

}  // namespace planedepth
