#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/eval.hpp"
#include "planedepth/flow.hpp"
#include "planedepth/forest.hpp"
#include "planedepth/lidar.hpp"
#include "planedepth/segmentation.hpp"
#include "planedepth/synthetic.hpp"

namespace planedepth {

enum class GcSource { Provided, Uniform, Baseline };
const char* to_string(GcSource s);
GcSource gc_source_from_string(const std::string& s);

struct OcclusionParams {
  /// Median depth gap above which a ground-truth boundary is occluding.
  double gap = 2.0;
  int pairwise_iterations = 3;
  int window = 30;
};

/// Everything the pipeline reads from a config file. Keys mirror the field
/// names; see README for the full list.
struct PipelineConfig {
  std::optional<CameraIntrinsics> intrinsics;  // default: CameraIntrinsics::defaults_for
  std::optional<double> horizon_row;           // default: principal point row
  SegmentationParams segmentation;
  FlowParams flow;
  ForestParams depth_forest;
  ForestParams occlusion_forest;
  ForestParams gc_forest;
  MrfWeights mrf;
  SamplingParams sampling;
  LbfgsConfig solver;
  OcclusionParams occlusion;
  int depth_window = 5;
  int gt_window = 5;
  GcSource gc_source = GcSource::Provided;
  LogBase log_base = LogBase::Ten;
  std::uint64_t seed = 0;

  CameraIntrinsics camera(int width, int height) const;
  double horizon(int width, int height) const;
  /// Reseeds every forest from seed.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Unknown keys are rejected so typos surface.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const CameraIntrinsics& K);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ForestParams& p);
ForestParams forest_params_from_json(const nlohmann::json& j, ForestParams base = {});
nlohmann::json to_json(const Extrinsics& e);
Extrinsics extrinsics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticScene& s);
SyntheticScene scene_from_json(const nlohmann::json& j);

/// Parses a JSON file, naming the path in errors.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace planedepth
