#pragma once

#include <span>
#include <vector>

#include "planedepth/raster.hpp"

namespace planedepth {

/// Square odd-sized kernel, row-major.
struct Kernel {
  int radius = 0;
  std::vector<double> taps;

  int size() const { return 2 * radius + 1; }
  double at(int dx, int dy) const { return taps[(dy + radius) * size() + (dx + radius)]; }
};

/// 2D correlation with border replication.
GrayImage filter2d(const GrayImage& image, const Kernel& kernel);

/// Separable correlation: row kernel along x, then column kernel along y.
GrayImage filter_separable(const GrayImage& image, std::span<const double> row,
                           std::span<const double> col);

GrayImage gaussian_blur(const GrayImage& image, double sigma);

/// Bilinear sample with coordinates clamped to the border.
float sample_bilinear(const GrayImage& image, double x, double y);
double sample_bilinear_rgb(const RgbImage& image, double x, double y, int channel);

/// Blur then keep every second pixel; output is ceil(w/2) x ceil(h/2).
GrayImage downsample(const GrayImage& image);

/// Bilinear resize to the given size, sampling pixel centers.
GrayImage resize_bilinear(const GrayImage& image, int width, int height);

/// Sobel-style derivative along x of odd size 3, 5 or 7, normalized so a
/// unit ramp along x responds with exactly 1. Transpose for y.
Kernel sobel_x(int size);
Kernel sobel_y(int size);

}  // namespace planedepth
