#pragma once

#include <memory>
#include <vector>

#include "planedepth/features.hpp"
#include "planedepth/forest.hpp"

namespace planedepth {

/// Width of the region descriptor used by the baseline classifier: the
/// color, texture and location blocks.
inline constexpr int kGcDescriptorSize = layout::kColor + layout::kTexture + layout::kLocation;

/// Supplies one confidence map per frame of a video.
class GeometricContextProvider {
 public:
  virtual ~GeometricContextProvider() = default;
  virtual std::vector<GeometricContextMap> maps(const VideoVolume& video, const SegmentationLabelMap& labels,
                                                const RegionTable& regions) const = 0;
};

/// Returns caller-supplied maps unchanged after checking their shape.
class FixedGeometricContext final : public GeometricContextProvider {
 public:
  explicit FixedGeometricContext(std::vector<GeometricContextMap> maps);
  std::vector<GeometricContextMap> maps(const VideoVolume& video, const SegmentationLabelMap& labels,
                                        const RegionTable& regions) const override;

 private:
  std::vector<GeometricContextMap> maps_;
};

/// Every class at 1/5 everywhere.
class UniformGeometricContext final : public GeometricContextProvider {
 public:
  std::vector<GeometricContextMap> maps(const VideoVolume& video, const SegmentationLabelMap& labels,
                                        const RegionTable& regions) const override;
};

/// Region classifier over color, texture and location.
class BaselineGeometricContext final : public GeometricContextProvider {
 public:
  BaselineGeometricContext(ForestModel model, double horizon_row);
  std::vector<GeometricContextMap> maps(const VideoVolume& video, const SegmentationLabelMap& labels,
                                        const RegionTable& regions) const override;

 private:
  ForestModel model_;
  double horizon_row_;
};

struct GcDescriptorRow {
  int region = 0;
  int frame = 0;
  std::array<double, kGcDescriptorSize> values{};
};

/// One descriptor per (region, frame) slice.
std::vector<GcDescriptorRow> gc_descriptors(const VideoVolume& video, const RegionTable& regions,
                                            double horizon_row);

/// y holds class indices (GeometricClass). Always a 5-class model.
ForestModel train_geometric_context(const FeatureMatrix& X, std::span<const double> y,
                                    const ForestParams& params);

/// Per-region class probabilities broadcast to the region's pixels.
/// Throws UntrainedModel for an untrained classifier.
std::vector<GeometricContextMap> baseline_geometric_context(const VideoVolume& video,
                                                            const SegmentationLabelMap& labels,
                                                            const RegionTable& regions,
                                                            const ForestModel& classifier,
                                                            double horizon_row);

}  // namespace planedepth
