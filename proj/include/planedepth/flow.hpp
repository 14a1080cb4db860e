#pragma once

#include <span>
#include <vector>

#include "planedepth/raster.hpp"

namespace planedepth {

/// Coarse-to-fine Horn-Schunck with image warping.
struct FlowParams {
  int pyramid_levels = 3;
  /// Jacobi iterations per warp.
  int iterations = 100;
  /// Horn-Schunck alpha on a 0..255 intensity scale.
  double smoothness = 15.0;
  int warps_per_level = 3;
  /// Gaussian sigma applied to both frames before estimation.
  double presmooth = 1.0;
};

/// Displacement taking pixels of a to their match in b.
FlowField dense_flow(const RgbImage& a, const RgbImage& b, const FlowParams& params = {});

/// result[t] = dense_flow(frame t, frame t + 1); T - 1 fields.
std::vector<FlowField> forward_flows(const VideoVolume& video, const FlowParams& params = {});

/// result[t] = dense_flow(frame t, frame t - 1) for t >= 1; result[0] is a
/// padded zero field. T fields.
std::vector<FlowField> backward_flows(const VideoVolume& video, const FlowParams& params = {});

/// p -> p + first(p) -> p + first(p) + second(p + first(p)), bilinear,
/// border-clamped.
FlowField compose_flows(const FlowField& first, const FlowField& second);

/// Flow from frame j to frame j - offset composed from backward fields.
/// Returns a zero field with padded = true when j - offset < 0.
FlowField flow_to(std::span<const FlowField> backward, int j, int offset);

FlowField flow_to(const VideoVolume& video, int j, int offset, const FlowParams& params = {});

/// Offsets used by the motion features.
inline constexpr int kFlowOffsets[3] = {1, 3, 5};

}  // namespace planedepth
