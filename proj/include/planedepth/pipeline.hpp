#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planedepth/config.hpp"
#include "planedepth/depth_mrf.hpp"
#include "planedepth/eval.hpp"
#include "planedepth/features.hpp"
#include "planedepth/forest.hpp"
#include "planedepth/occlusion.hpp"

namespace planedepth {

/// Feature subsets. Appearance = color, texture, location; AppFlow adds
/// motion; All adds geometric context. Edgelet descriptors follow suit:
/// color differences, then motion and flow consistency, then geom.
enum class Ablation { All, AppFlow, Appearance };
const char* to_string(Ablation a);
/// Accepts "ALL", "App+Flow" and "Appearance" (case-insensitive).
Ablation ablation_from_string(const std::string& s);

std::vector<int> feature_columns(Ablation a);
std::vector<int> edgelet_columns(Ablation a);
std::vector<std::string> edgelet_feature_names();
/// Widths of the color, texture, location, motion and geom blocks.
std::vector<int> feature_block_sizes();

/// Resolves a model's feature names to column indices of the full schema.
std::vector<int> model_columns(const ForestModel& model, const std::vector<std::string>& schema);

struct VideoSample {
  std::string name;
  VideoVolume video;
  CameraIntrinsics K;
  /// Ground-truth or precomputed regions; segmented when absent.
  std::optional<SegmentationLabelMap> labels;
  /// Per-frame ground truth; empty when unknown.
  std::vector<DepthMap> gt_depth;
  /// Externally provided confidence maps; empty when unknown.
  std::vector<GeometricContextMap> gc;
};

struct PreparedVideo {
  VideoSample sample;
  SegmentationLabelMap labels;
  RegionTable regions;
  std::vector<FlowField> backward;
  std::vector<GeometricContextMap> gc;
  std::vector<FeatureRow> features;
  EdgeletGraph edgelets;
};

/// Segments (when needed), estimates flow, builds geometric context per
/// cfg.gc_source, and extracts region and edgelet features.
PreparedVideo prepare_video(VideoSample sample, const PipelineConfig& cfg, const ForestModel* gc_model = nullptr);

/// Replaces the geom block of every region row and the geom differences of
/// every edgelet with values from maps.
void apply_geometric_context(PreparedVideo& v, std::vector<GeometricContextMap> maps);

struct TrainingSet {
  FeatureMatrix X;
  std::vector<double> y;
};

/// Rows whose region slice has valid ground truth; y = log10 of its mean depth.
TrainingSet depth_training_set(std::span<const PreparedVideo> videos, Ablation a);
/// y = 1 for non-occluding, 0 for occluding boundaries.
TrainingSet occlusion_training_set(std::span<const PreparedVideo> videos, Ablation a, double gap);
/// y = argmax of the provided confidence averaged over the region slice.
TrainingSet gc_training_set(std::span<const PreparedVideo> videos, const PipelineConfig& cfg);

ForestModel train_depth_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg, Ablation a);
ForestModel train_occlusion_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg, Ablation a);
ForestModel train_gc_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg);

/// Per-pixel unary map: each region slice gets 10^prediction, clamped to
/// [0.1, kMaxDepth].
std::vector<DepthMap> predict_unary_depth(const PreparedVideo& v, const ForestModel& depth_model);

/// Classifies, pairwise-smooths and temporally smooths the edgelets.
void estimate_gates(EdgeletGraph& graph, const ForestModel& occlusion_model, const PipelineConfig& cfg);
/// Gates from ground truth: 1 non-occluding, 0 occluding or unknown.
void oracle_gates(EdgeletGraph& graph, const SegmentationLabelMap& labels, std::span<const DepthMap> depth,
                  double gap);

struct FrameStats {
  int regions = 0;
  int pairs = 0;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct InferenceResult {
  PlaneTable planes;     // per-frame MRF solutions
  PlaneTable smoothed;   // after the temporal median
  std::vector<DepthMap> depth;
  std::vector<FrameStats> frames;
};

/// Solves the MRF per frame and smooths planes over cfg.depth_window.
/// Regions with no usable unary fall back to a far fronto-parallel plane.
InferenceResult infer_depth(const SegmentationLabelMap& labels, std::span<const DepthMap> unary,
                            const EdgeletGraph& gated, const CameraIntrinsics& K, const PipelineConfig& cfg);

struct CrossvalResult {
  Ablation ablation = Ablation::All;
  std::vector<std::vector<int>> test_videos;  // per fold
  std::vector<EvalReport> folds;
  std::vector<EvalReport> unary_folds;  // unary-only rendering, for reference
  EvalReport aggregate;
  EvalReport unary_aggregate;
};

/// Whole videos shuffled with seed and dealt round-robin into k folds.
std::vector<std::vector<int>> make_folds(int n_videos, int k, std::uint64_t seed);

CrossvalResult crossval(std::span<const PreparedVideo> videos, int k, const PipelineConfig& cfg, Ablation a,
                        std::uint64_t seed);

nlohmann::json to_json(const CrossvalResult& r);

}  // namespace planedepth
