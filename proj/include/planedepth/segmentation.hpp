#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "planedepth/raster.hpp"

namespace planedepth {

struct SegmentationParams {
  /// Adaptive-threshold constant: components C1, C2 joined by an edge of
  /// weight w merge when w <= min(Int(C) + k / |C|) over both.
  double k = 300.0;
  /// A region whose mean per-frame slice is smaller than this is merged
  /// into its cheapest neighbor.
  int min_region_size = 64;
  /// Gaussian pre-smoothing of each frame; 0 disables.
  double sigma = 0.0;
};

/// forward_flows[t] maps frame t to frame t + 1; pass one per consecutive
/// pair or none at all (temporal edges then link identical positions).
SegmentationLabelMap segment_video(const VideoVolume& video, std::span<const FlowField> forward_flows,
                                   const SegmentationParams& params);

struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive

  bool empty() const { return x1 < x0; }
  void extend(int x, int y);
};

struct RegionInfo {
  std::int64_t pixel_count = 0;
  /// pixels[t] are in-frame pixel indices (y * width + x) in ascending order.
  std::vector<std::vector<std::int32_t>> pixels;
  std::vector<BoundingBox> boxes;

  bool present_in(int frame) const { return !pixels[frame].empty(); }
};

struct RegionTable {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<RegionInfo> regions;
  /// Pairs (i < j) sharing a 4-connected spatial boundary in any frame.
  std::set<std::pair<int, int>> adjacency;
};

RegionTable region_index(const SegmentationLabelMap& labels);

/// Throws unless every pixel holds a label in 0..R-1 with every ID used.
void validate_labels(const SegmentationLabelMap& labels);

/// Relabels so IDs are contiguous and ordered by first appearance.
void compact_labels(SegmentationLabelMap& labels);

}  // namespace planedepth
