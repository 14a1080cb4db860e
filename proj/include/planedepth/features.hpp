#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planedepth/raster.hpp"
#include "planedepth/segmentation.hpp"

namespace planedepth {

/// Column layout of a region feature vector. Offsets are stable; models and
/// files depend on them.
///
///   block      dims  offset
///   color         6       0   mean R,G,B in [0,1], mean H,S,V in [0,1]
///   texture      15       6   mean |response| of the 15-filter bank
///   location      2      21   mean y / height, (mean y - horizon) / height
///   motion      105      23   3 offsets (1, 3, 5) x 35, see below
///   geom          5     128   mean sky, ground, solid, porous, movable
///
/// Each 35-value motion group: 8-bin magnitude-weighted orientation
/// histogram, mean du, mean dv, mean |flow|, then for Sobel sizes 3, 5, 7 a
/// 4-bin histogram of |dF/dx| followed by a 4-bin histogram of |dF/dy|.
namespace layout {
inline constexpr int kColor = 6;
inline constexpr int kTexture = 15;
inline constexpr int kLocation = 2;
inline constexpr int kMotionPerOffset = 35;
inline constexpr int kMotion = 3 * kMotionPerOffset;
inline constexpr int kGeom = 5;
inline constexpr int kTotal = kColor + kTexture + kLocation + kMotion + kGeom;

inline constexpr int kColorOffset = 0;
inline constexpr int kTextureOffset = kColorOffset + kColor;
inline constexpr int kLocationOffset = kTextureOffset + kTexture;
inline constexpr int kMotionOffset = kLocationOffset + kLocation;
inline constexpr int kGeomOffset = kMotionOffset + kMotion;

inline constexpr int kOrientationBins = 8;
inline constexpr int kDerivativeBins = 4;
/// Upper edges of the derivative-magnitude bins, in pixels; last bin is open.
inline constexpr double kDerivativeEdges[3] = {0.1, 0.5, 2.0};
inline constexpr int kSobelSizes[3] = {3, 5, 7};

static_assert(kTotal == 133);
}  // namespace layout

enum class FeatureBlock { Color, Texture, Location, Motion, Geom };

/// Column names, "block.column".
const std::vector<std::string>& feature_names();

struct RegionFeatures {
  std::array<double, layout::kTotal> values{};

  std::span<const double> block(FeatureBlock b) const;
  std::span<const double> motion_group(int offset_index) const {
    return {values.data() + layout::kMotionOffset + offset_index * layout::kMotionPerOffset,
            static_cast<std::size_t>(layout::kMotionPerOffset)};
  }
};

inline constexpr int kGeomClasses = 5;
enum class GeometricClass : int { Sky = 0, Ground = 1, Solid = 2, Porous = 3, Movable = 4 };
const char* to_string(GeometricClass c);

/// Per-pixel class confidences (sky, ground, solid, porous, movable).
struct GeometricContextMap {
  int width = 0;
  int height = 0;
  std::vector<float> confidence;  // kGeomClasses per pixel

  GeometricContextMap() = default;
  GeometricContextMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), confidence(static_cast<std::size_t>(w) * h * kGeomClasses, fill) {}

  float at(std::size_t pixel, int c) const { return confidence[pixel * kGeomClasses + c]; }
  float& at(std::size_t pixel, int c) { return confidence[pixel * kGeomClasses + c]; }

  /// Throws when a confidence leaves [0,1] or a pixel sums above 1 + 1e-6.
  void validate() const;
};

using PixelList = std::span<const std::int32_t>;

std::array<double, layout::kColor> color_features(const RgbImage& frame, PixelList pixels);

/// RGB in 0..255 to HSV in [0,1]^3.
std::array<double, 3> rgb_to_hsv(double r, double g, double b);

/// Responses of the 15-filter bank on one frame (intensity scaled to [0,1]).
///   0-7   first derivative of Gaussian, sigma 1 and 2, at 0/45/90/135 deg
///         (index = scale * 4 + orientation)
///   8-11  Laplacian of Gaussian, sigma 1, sqrt2, 2, 2sqrt2
///   12-14 elongated second-derivative bars at 0/60/120 deg
struct TextureResponses {
  std::array<GrayImage, layout::kTexture> response;
};

TextureResponses texture_responses(const RgbImage& frame);
std::array<double, layout::kTexture> texture_features(const TextureResponses& responses, PixelList pixels);
std::array<double, layout::kTexture> texture_features(const RgbImage& frame, PixelList pixels);

std::array<double, layout::kLocation> location_features(PixelList pixels, int width, int height,
                                                        double horizon_row);

/// Flow plus its per-pixel derivative magnitudes at the three Sobel sizes.
struct FlowDerivatives {
  const FlowField* flow = nullptr;
  std::array<GrayImage, 3> dx;
  std::array<GrayImage, 3> dy;
};

FlowDerivatives flow_derivatives(const FlowField& flow);

/// flows[k] is the field for offset kFlowOffsets[k]; padded fields yield
/// an all-zero group.
std::array<double, layout::kMotion> motion_features(std::span<const FlowDerivatives, 3> flows,
                                                    PixelList pixels);
std::array<double, layout::kMotion> motion_features(std::span<const FlowField, 3> flows, PixelList pixels);

std::array<double, layout::kGeom> geometric_features(const GeometricContextMap& gc, PixelList pixels,
                                                     int width, int height);

struct FeatureBlocks {
  std::optional<std::array<double, layout::kColor>> color;
  std::optional<std::array<double, layout::kTexture>> texture;
  std::optional<std::array<double, layout::kLocation>> location;
  std::optional<std::array<double, layout::kMotion>> motion;
  std::optional<std::array<double, layout::kGeom>> geom;
};

/// Throws InconsistentInput naming the first missing block.
RegionFeatures assemble_features(const FeatureBlocks& blocks);

/// One row per (region, frame) slice.
struct FeatureRow {
  int region = 0;
  int frame = 0;
  std::int64_t pixel_count = 0;
  RegionFeatures features;
};

/// backward must hold one field per frame as produced by backward_flows();
/// gc one map per frame.
std::vector<FeatureRow> extract_video_features(const VideoVolume& video, const SegmentationLabelMap& labels,
                                               const RegionTable& regions,
                                               std::span<const FlowField> backward,
                                               std::span<const GeometricContextMap> gc,
                                               double horizon_row);

}  // namespace planedepth
