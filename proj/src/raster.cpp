#include "planedepth/raster.hpp"

#include <algorithm>

namespace planedepth {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::BehindCamera: return "behind-camera";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::InconsistentInput: return "inconsistent-input";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::UntrainedModel: return "untrained-model";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const std::uint8_t* p = image.px(i);
    out.values[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
  }
  return out;
}

void VideoVolume::validate() const {
  if (frames.empty()) throw Error(ErrorKind::EmptyInput, "video has no frames");
  const int w = frames.front().width;
  const int h = frames.front().height;
  if (w <= 0 || h <= 0) throw Error(ErrorKind::EmptyInput, "video frames are empty");
  for (const auto& f : frames) require_same_size(w, h, f.width, f.height, "video frame");
}

int SegmentationLabelMap::region_count() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::string size_string(int width, int height) {
  return std::to_string(width) + "x" + std::to_string(height);
}

void require_same_size(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": size " + size_string(w1, h1) +
                                                  " does not match " + size_string(w0, h0));
  }
}

}  // namespace planedepth
