#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/features.hpp"
#include "planedepth/geometry.hpp"

namespace planedepth {

enum class TexturePattern { Flat, Stripes, Checker, Noise };
const char* to_string(TexturePattern p);
TexturePattern texture_pattern_from_string(const std::string& s);

/// A planar patch. Its extent is a rectangle in frame-0 pixel coordinates:
/// a ray hits the region when its plane intersection, moved back to the
/// frame-0 camera, projects inside the rectangle.
struct SceneRegion {
  std::string name;
  PlaneParams plane;  // frame-0 camera coordinates
  double x0 = -1e9, y0 = -1e9, x1 = 1e9, y1 = 1e9;
  /// A marking lies on its parent's plane, moves with it and draws on top.
  int parent = -1;
  GeometricClass geom_class = GeometricClass::Solid;
  std::array<std::uint8_t, 3> color{128, 128, 128};
  TexturePattern pattern = TexturePattern::Noise;
  double pattern_scale = 4.0;     // pixels per period
  double pattern_contrast = 40.0; // intensity amplitude, 0..255 scale
  double pattern_angle = 0.0;     // radians, stripes only
  /// World velocity in meters per frame (ignored for markings).
  Vec3 velocity = Vec3::Zero();
};

struct SyntheticScene {
  int width = 96;
  int height = 72;
  CameraIntrinsics K = CameraIntrinsics::defaults_for(96, 72);
  /// Region 0 should cover the whole frame so every pixel hits something.
  std::vector<SceneRegion> regions;
  /// Camera translation per frame, meters.
  Vec3 camera_velocity = Vec3::Zero();
  /// Gaussian RGB noise sigma, 0..255 scale.
  double pixel_noise = 0.0;
  /// Weight of the random component in the generated geometric context maps.
  double gc_noise = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OcclusionTruth {
  int frame = 0;
  int i = 0;
  int j = 0;
  int label = 1;  // 1 non-occluding, 0 occluding
};

struct SyntheticVideo {
  CameraIntrinsics K;
  VideoVolume video;
  std::vector<DepthMap> depth;
  SegmentationLabelMap labels;
  PlaneTable planes;  // planes[t][region]
  std::vector<OcclusionTruth> occlusion;
  std::vector<GeometricContextMap> gc;
  std::vector<GeometricClass> region_classes;
};

/// Ray-casts every frame. Throws InconsistentInput when a pixel hits no
/// region, a region is missing from the labels, or a plane turns behind
/// the camera.
SyntheticVideo generate_scene(const SyntheticScene& scene, int frames);

struct RandomSceneOptions {
  int width = 96;
  int height = 72;
  /// Total region count including background, ground and markings.
  int min_regions = 3;
  int max_regions = 8;
  bool ground = true;
  bool markings = true;
  /// Maximum lateral camera speed, meters per frame.
  double max_pan = 0.12;
  /// Probability that the camera is static.
  double static_probability = 0.3;
  /// Maximum |tan| of object plane tilt.
  double max_slant = 0.3;
  double pixel_noise = 2.0;
  double gc_noise = 0.3;
  /// Smallest visible slice a region may have in any frame.
  int min_pixels = 24;
  int max_attempts = 400;
};

/// A scene whose generated video passes check_scene_contract for the
/// given frame count. Deterministic in seed.
SyntheticScene random_scene(std::uint64_t seed, int frames, const RandomSceneOptions& options = {});

/// Checks the properties the oracle tests rely on: every region visible
/// with at least min_pixels in every frame and fittable, no depth clamped,
/// and non-occluding boundaries exactly between regions sharing a plane.
/// Returns an empty string on success, otherwise the first violation.
std::string check_scene_contract(const SyntheticScene& scene, const SyntheticVideo& video, int min_pixels);

/// Per region, the root of its marking chain.
int plane_owner(const SyntheticScene& scene, int region);

}  // namespace planedepth
