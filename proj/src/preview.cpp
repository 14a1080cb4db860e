#include "planedepth/preview.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "planedepth/geometry.hpp"

namespace planedepth {
namespace {

// 3x5 glyphs, one row per entry, bit 2 is the leftmost column.
struct Glyph {
  char c;
  std::array<std::uint8_t, 5> rows;
};

constexpr Glyph kGlyphs[] = {
    {'0', {7, 5, 5, 5, 7}}, {'8', {7, 5, 7, 5, 7}}, {'m', {0, 0, 7, 7, 5}},
};

void draw_text(RgbImage& img, int x, int y, const std::string& text, int scale) {
  for (char c : text) {
    const auto it = std::find_if(std::begin(kGlyphs), std::end(kGlyphs), [c](const Glyph& g) { return g.c == c; });
    if (it != std::end(kGlyphs)) {
      for (int r = 0; r < 5; ++r)
        for (int col = 0; col < 3; ++col) {
          if (!((it->rows[r] >> (2 - col)) & 1)) continue;
          for (int sy = 0; sy < scale; ++sy)
            for (int sx = 0; sx < scale; ++sx) {
              const int px = x + col * scale + sx, py = y + r * scale + sy;
              if (px < 0 || py < 0 || px >= img.width || py >= img.height) continue;
              std::uint8_t* p = img.px(px, py);
              p[0] = p[1] = p[2] = 255;
            }
        }
    }
    x += 4 * scale;
  }
}

}  // namespace

std::array<std::uint8_t, 3> depth_color(double meters) {
  const double t = std::clamp(meters / kMaxDepth, 0.0, 1.0);
  // Hue sweeps 240 (blue) down to 0 (red) at full saturation and value.
  const double h = (1.0 - t) * 4.0;
  const int sector = std::min(static_cast<int>(h), 3);
  const double f = h - sector;
  const auto u8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  switch (sector) {
    case 0: return {255, u8(f), 0};        // red -> yellow
    case 1: return {u8(1.0 - f), 255, 0};  // yellow -> green
    case 2: return {0, 255, u8(f)};        // green -> cyan
    default: return {0, u8(1.0 - f), 255}; // cyan -> blue
  }
}

RgbImage depth_preview(const DepthMap& depth, bool legend) {
  const int scale = std::max(1, depth.width / 160);
  const int bar = legend ? 8 * scale + 7 * scale : 0;
  RgbImage img(depth.width, depth.height + bar);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
      if (!depth.valid[i]) continue;
      const auto c = depth_color(depth.values[i]);
      std::copy(c.begin(), c.end(), img.px(x, y));
    }
  if (legend) {
    const int y0 = depth.height + scale;
    for (int y = y0; y < y0 + 6 * scale && y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const auto c = depth_color(kMaxDepth * x / std::max(1, img.width - 1));
        std::copy(c.begin(), c.end(), img.px(x, y));
      }
    const int ty = y0 + 7 * scale;
    draw_text(img, scale, ty, "0m", scale);
    draw_text(img, img.width - 12 * scale, ty, "80m", scale);
  }
  return img;
}

}  // namespace planedepth
