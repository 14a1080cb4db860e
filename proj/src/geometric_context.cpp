#include "planedepth/geometric_context.hpp"

#include <algorithm>

namespace planedepth {
namespace {

void check_maps(std::span<const GeometricContextMap> maps, const VideoVolume& video) {
  if (static_cast<int>(maps.size()) != video.frame_count()) {
    throw Error(ErrorKind::InconsistentInput, "geometric context: " + std::to_string(maps.size()) +
                                                  " maps for " + std::to_string(video.frame_count()) +
                                                  " frames");
  }
  for (const auto& m : maps) {
    require_same_size(m.width, m.height, video.width(), video.height(), "geometric context map");
    m.validate();
  }
}

}  // namespace

FixedGeometricContext::FixedGeometricContext(std::vector<GeometricContextMap> maps) : maps_(std::move(maps)) {}

std::vector<GeometricContextMap> FixedGeometricContext::maps(const VideoVolume& video, const SegmentationLabelMap&,
                                                             const RegionTable&) const {
  check_maps(maps_, video);
  return maps_;
}

std::vector<GeometricContextMap> UniformGeometricContext::maps(const VideoVolume& video,
                                                               const SegmentationLabelMap&,
                                                               const RegionTable&) const {
  video.validate();
  return std::vector<GeometricContextMap>(video.frame_count(),
                                          GeometricContextMap(video.width(), video.height(), 0.2f));
}

BaselineGeometricContext::BaselineGeometricContext(ForestModel model, double horizon_row)
    : model_(std::move(model)), horizon_row_(horizon_row) {}

std::vector<GeometricContextMap> BaselineGeometricContext::maps(const VideoVolume& video,
                                                                const SegmentationLabelMap& labels,
                                                                const RegionTable& regions) const {
  return baseline_geometric_context(video, labels, regions, model_, horizon_row_);
}

std::vector<GcDescriptorRow> gc_descriptors(const VideoVolume& video, const RegionTable& regions,
                                            double horizon_row) {
  video.validate();
  require_same_size(video.width(), video.height(), regions.width, regions.height, "region table");
  std::vector<GcDescriptorRow> rows;
  for (int t = 0; t < video.frame_count(); ++t) {
    const TextureResponses tex = texture_responses(video.frames[t]);
    for (int r = 0; r < static_cast<int>(regions.regions.size()); ++r) {
      const auto& pixels = regions.regions[r].pixels[t];
      if (pixels.empty()) continue;
      GcDescriptorRow row{r, t, {}};
      const auto c = color_features(video.frames[t], pixels);
      const auto x = texture_features(tex, pixels);
      const auto l = location_features(pixels, video.width(), video.height(), horizon_row);
      auto out = std::copy(c.begin(), c.end(), row.values.begin());
      out = std::copy(x.begin(), x.end(), out);
      std::copy(l.begin(), l.end(), out);
      rows.push_back(row);
    }
  }
  return rows;
}

ForestModel train_geometric_context(const FeatureMatrix& X, std::span<const double> y,
                                    const ForestParams& params) {
  if (X.cols != static_cast<std::size_t>(kGcDescriptorSize)) {
    throw Error(ErrorKind::DimensionMismatch, "train_geometric_context: expected " +
                                                  std::to_string(kGcDescriptorSize) + " columns");
  }
  ForestModel m = train_forest(X, y, params, ForestTask::Classification, kGeomClasses);
  const auto& names = feature_names();
  m.feature_names.assign(names.begin(), names.begin() + kGcDescriptorSize);
  return m;
}

std::vector<GeometricContextMap> baseline_geometric_context(const VideoVolume& video,
                                                            const SegmentationLabelMap& labels,
                                                            const RegionTable& regions,
                                                            const ForestModel& classifier,
                                                            double horizon_row) {
  if (!classifier.trained()) {
    throw Error(ErrorKind::UntrainedModel, "geometric context classifier is not trained");
  }
  if (classifier.task() != ForestTask::Classification || classifier.n_classes() != kGeomClasses ||
      classifier.n_features() != static_cast<std::size_t>(kGcDescriptorSize)) {
    throw Error(ErrorKind::InvalidArgument,
                "geometric context classifier must be a 5-class model over 23 descriptor columns");
  }
  require_same_size(video.width(), video.height(), labels.width, labels.height, "label map");
  std::vector<GeometricContextMap> maps(video.frame_count(),
                                        GeometricContextMap(video.width(), video.height(), 0.0f));
  for (const auto& row : gc_descriptors(video, regions, horizon_row)) {
    const auto p = classifier.predict(row.values);
    auto& map = maps[row.frame];
    for (std::int32_t px : regions.regions[row.region].pixels[row.frame])
      for (int c = 0; c < kGeomClasses; ++c) map.at(static_cast<std::size_t>(px), c) = static_cast<float>(p[c]);
  }
  return maps;
}

}  // namespace planedepth
