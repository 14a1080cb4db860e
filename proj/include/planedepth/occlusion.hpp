#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "planedepth/features.hpp"
#include "planedepth/forest.hpp"

namespace planedepth {

/// Edgelet descriptor layout.
///   0-5    |color_i - color_j|
///   6-10   |geom_i - geom_j|
///   11-13  L2 distance of the motion groups, offsets 1, 3, 5
///   14     mean |flow(p) - flow(q)| over boundary crossings (offset-1 flow)
///   15     mean RGB distance / 255 between I_t(p) and I_{t-1}(p + flow(p))
namespace edgelet_layout {
inline constexpr int kColorOffset = 0;
inline constexpr int kGeomOffset = 6;
inline constexpr int kMotionOffset = 11;
inline constexpr int kFlowOffset = 14;
inline constexpr int kTotal = 16;
}  // namespace edgelet_layout

using EdgeletFeatures = std::array<double, edgelet_layout::kTotal>;

struct Edgelet {
  int i = 0;  // i < j
  int j = 0;
  int frame = 0;
  /// Pixels of region i that are 4-adjacent to region j, ascending.
  std::vector<std::int32_t> boundary;
  /// Pixels of region j that are 4-adjacent to region i, ascending.
  std::vector<std::int32_t> boundary_j;
  EdgeletFeatures features{};
  double unary = 0.5;
  /// Probability the boundary is non-occluding; the MRF gate y_ij.
  double p_non_occl = 0.5;
};

struct EdgeletGraph {
  std::vector<Edgelet> edgelets;
  /// Same-frame edgelets sharing a region endpoint; symmetric.
  std::vector<std::vector<int>> neighbors;
  /// Edgelet indices per region pair, ordered by frame.
  std::map<std::pair<int, int>, std::vector<int>> tracks;
};

/// One edgelet per 4-adjacent region pair in the frame.
std::vector<Edgelet> extract_edgelets(const SegmentationLabelMap& labels, int frame);

/// Edgelets of every frame plus connectivity and tracks.
EdgeletGraph build_edgelet_graph(const SegmentationLabelMap& labels);

/// Rebuilds neighbors and tracks from the edgelet list.
void link_edgelets(EdgeletGraph& graph);

/// flow is the offset-1 backward field of the edgelet's frame; previous is
/// frame t-1 (null or a padded flow zeroes the warp error).
EdgeletFeatures edgelet_features(const Edgelet& e, const RegionFeatures& fi, const RegionFeatures& fj,
                                 const SegmentationLabelMap& labels, const FlowField& flow,
                                 const RgbImage& current, const RgbImage* previous);

/// Fills features for every edgelet. features[frame] maps region id to row;
/// throws InconsistentInput when a side has no features.
void compute_edgelet_features(EdgeletGraph& graph, const VideoVolume& video, const SegmentationLabelMap& labels,
                              std::span<const FeatureRow> region_rows, std::span<const FlowField> backward);

/// Class 1 of the model is non-occluding. columns selects the descriptor
/// columns the model was trained on (empty = all 16).
void classify_edgelets(EdgeletGraph& graph, const ForestModel& model, std::span<const int> columns = {});

/// Synchronous update, for each state s:
///   p'_n(s) ~ g_n(s) * prod_{m in conn(n)} sqrt(p_n(s) p_m(s))
/// with g the unary and p the current iterate.
void smooth_pairwise(EdgeletGraph& graph, int iterations = 3);

/// Per track, replaces p at frame t by the mean over the track's members in
/// frames [t - window/2, t + (window-1)/2].
void temporal_smooth(EdgeletGraph& graph, int window = 30);

/// 1 = non-occluding, 0 = occluding, nullopt when no boundary crossing has
/// valid depth on both sides. Occluding iff the median |d(p) - d(q)| over
/// crossings exceeds gap.
std::optional<int> occlusion_label(const Edgelet& e, const SegmentationLabelMap& labels, const DepthMap& depth,
                                   double gap = 2.0);

/// Every crossing (p in region i, q in region j) of an edgelet, 4-adjacent.
std::vector<std::pair<std::int32_t, std::int32_t>> boundary_crossings(const Edgelet& e,
                                                                      const SegmentationLabelMap& labels);

void write_edgelets_jsonl(std::ostream& out, const EdgeletGraph& graph);
/// Boundary pixel lists are not stored; the rest round-trips.
EdgeletGraph read_edgelets_jsonl(std::istream& in);

}  // namespace planedepth
