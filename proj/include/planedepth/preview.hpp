#pragma once

#include <array>
#include <cstdint>

#include "planedepth/raster.hpp"

namespace planedepth {

/// Blue at 0 m through cyan, green and yellow to red at kMaxDepth.
std::array<std::uint8_t, 3> depth_color(double meters);

/// Color-mapped depth; invalid pixels are black. With legend, a gradient
/// bar labeled 0m and 80m is appended below the image.
RgbImage depth_preview(const DepthMap& depth, bool legend = false);

}  // namespace planedepth
