#include "planedepth/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace planedepth {
namespace {

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

std::vector<double> convolve1d(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> binomial(int size) {
  std::vector<double> row{1.0};
  for (int i = 1; i < size; ++i) row = convolve1d(row, {1.0, 1.0});
  return row;
}

Kernel outer(const std::vector<double>& along_x, const std::vector<double>& along_y) {
  Kernel k;
  k.radius = static_cast<int>(along_x.size() / 2);
  k.taps.resize(along_x.size() * along_y.size());
  for (std::size_t y = 0; y < along_y.size(); ++y)
    for (std::size_t x = 0; x < along_x.size(); ++x) k.taps[y * along_x.size() + x] = along_x[x] * along_y[y];
  return k;
}

void sobel_parts(int size, std::vector<double>& deriv, std::vector<double>& smooth) {
  if (size != 3 && size != 5 && size != 7) {
    throw Error(ErrorKind::InvalidArgument, "sobel kernel size must be 3, 5 or 7, got " + std::to_string(size));
  }
  smooth = binomial(size);
  double s = 0.0;
  for (double v : smooth) s += v;
  for (double& v : smooth) v /= s;
  deriv = convolve1d({-1.0, 0.0, 1.0}, binomial(size - 2));
  const int r = size / 2;
  double ramp = 0.0;
  for (int i = -r; i <= r; ++i) ramp += deriv[i + r] * i;
  for (double& v : deriv) v /= ramp;
}

}  // namespace

GrayImage filter2d(const GrayImage& image, const Kernel& kernel) {
  GrayImage out(image.width, image.height);
  const int r = kernel.radius;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, image.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, image.width - 1);
          acc += kernel.at(dx, dy) * image.at(xx, yy);
        }
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

GrayImage filter_separable(const GrayImage& image, std::span<const double> row,
                           std::span<const double> col) {
  const int rr = static_cast<int>(row.size() / 2);
  const int rc = static_cast<int>(col.size() / 2);
  GrayImage tmp(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double acc = 0.0;
      for (int d = -rr; d <= rr; ++d) acc += row[d + rr] * image.at(std::clamp(x + d, 0, image.width - 1), y);
      tmp.at(x, y) = static_cast<float>(acc);
    }
  }
  GrayImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double acc = 0.0;
      for (int d = -rc; d <= rc; ++d) acc += col[d + rc] * tmp.at(x, std::clamp(y + d, 0, image.height - 1));
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  if (sigma <= 0.0) return image;
  const auto taps = gaussian_taps(sigma);
  return filter_separable(image, taps, taps);
}

float sample_bilinear(const GrayImage& image, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  // Integer positions return the stored value exactly.
  if (fx == 0.0 && fy == 0.0) return image.at(x0, y0);
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const double top = (1.0 - fx) * image.at(x0, y0) + fx * image.at(x1, y0);
  const double bottom = (1.0 - fx) * image.at(x0, y1) + fx * image.at(x1, y1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

double sample_bilinear_rgb(const RgbImage& image, double x, double y, int channel) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * image.px(x0, y0)[channel] + fx * image.px(x1, y0)[channel];
  const double bottom = (1.0 - fx) * image.px(x0, y1)[channel] + fx * image.px(x1, y1)[channel];
  return (1.0 - fy) * top + fy * bottom;
}

GrayImage downsample(const GrayImage& image) {
  const GrayImage smooth = gaussian_blur(image, 1.0);
  GrayImage out((image.width + 1) / 2, (image.height + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = smooth.at(2 * x, 2 * y);
  return out;
}

GrayImage resize_bilinear(const GrayImage& image, int width, int height) {
  GrayImage out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = sample_bilinear(image, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
  return out;
}

Kernel sobel_x(int size) {
  std::vector<double> deriv, smooth;
  sobel_parts(size, deriv, smooth);
  return outer(deriv, smooth);
}

Kernel sobel_y(int size) {
  std::vector<double> deriv, smooth;
  sobel_parts(size, deriv, smooth);
  return outer(smooth, deriv);
}

}  // namespace planedepth
