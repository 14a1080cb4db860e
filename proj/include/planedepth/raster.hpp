#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "planedepth/error.hpp"

namespace planedepth {

/// Dense single-channel 2D grid, row-major.
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return values.size(); }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  T& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

using GrayImage = Raster<float>;

/// 8-bit RGB, interleaved.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* px(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* px(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  const std::uint8_t* px(std::size_t index) const { return &data[index * 3]; }
};

/// Grayscale in [0, 255].
GrayImage to_gray(const RgbImage& image);

struct VideoVolume {
  std::vector<RgbImage> frames;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int frame_count() const { return static_cast<int>(frames.size()); }

  /// Throws on an empty video or frames of differing size.
  void validate() const;
};

/// Per-pixel metric depth (ray distance) with validity mask.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        values(static_cast<std::size_t>(w) * h, 0.0f),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t size() const { return values.size(); }
};

/// Dense flow from one frame into another, in pixels.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> du;
  std::vector<float> dv;
  /// Set when the requested source frame did not exist; the field is all zeros.
  bool padded = false;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h),
        du(static_cast<std::size_t>(w) * h, 0.0f),
        dv(static_cast<std::size_t>(w) * h, 0.0f) {}

  std::size_t size() const { return du.size(); }
};

/// Spatio-temporal region IDs, frame-major then row-major.
struct SegmentationLabelMap {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<std::int32_t> labels;

  SegmentationLabelMap() = default;
  SegmentationLabelMap(int w, int h, int t)
      : width(w), height(h), frames(t),
        labels(static_cast<std::size_t>(w) * h * t, 0) {}

  std::size_t frame_size() const { return static_cast<std::size_t>(width) * height; }
  std::span<const std::int32_t> frame(int t) const {
    return {labels.data() + frame_size() * t, frame_size()};
  }
  std::span<std::int32_t> frame(int t) { return {labels.data() + frame_size() * t, frame_size()}; }
  std::int32_t at(int x, int y, int t) const {
    return labels[frame_size() * t + static_cast<std::size_t>(y) * width + x];
  }

  /// Largest label + 1 (0 when empty).
  int region_count() const;
};

std::string size_string(int width, int height);

void require_same_size(int w0, int h0, int w1, int h1, const char* what);

}  // namespace planedepth
