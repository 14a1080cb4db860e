#include "planedepth/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "planedepth/flow.hpp"
#include "planedepth/imgproc.hpp"

namespace planedepth {
namespace {

void require_pixels(PixelList pixels, const char* what) {
  if (pixels.empty()) throw Error(ErrorKind::EmptyInput, std::string(what) + ": empty region");
}

double gaussian(double x, double y, double sx, double sy) {
  return std::exp(-0.5 * (x * x / (sx * sx) + y * y / (sy * sy)));
}

Kernel make_kernel(int radius) {
  Kernel k;
  k.radius = radius;
  k.taps.assign(static_cast<std::size_t>(k.size()) * k.size(), 0.0);
  return k;
}

double& tap(Kernel& k, int dx, int dy) { return k.taps[(dy + k.radius) * k.size() + (dx + k.radius)]; }

void remove_mean(Kernel& k) {
  double mean = 0.0;
  for (double t : k.taps) mean += t;
  mean /= static_cast<double>(k.taps.size());
  for (double& t : k.taps) t -= mean;
}

void normalize_l1(Kernel& k) {
  double s = 0.0;
  for (double t : k.taps) s += std::abs(t);
  for (double& t : k.taps) t /= s;
}

/// Derivative of an isotropic Gaussian along theta, unit response to a ramp.
Kernel oriented_derivative(double sigma, double theta) {
  Kernel k = make_kernel(static_cast<int>(std::ceil(3.0 * sigma)));
  const double c = std::cos(theta), s = std::sin(theta);
  double ramp = 0.0;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const double along = dx * c + dy * s;
      tap(k, dx, dy) = along * gaussian(dx, dy, sigma, sigma);
      ramp += tap(k, dx, dy) * along;
    }
  }
  for (double& t : k.taps) t /= ramp;
  return k;
}

Kernel laplacian_of_gaussian(double sigma) {
  Kernel k = make_kernel(static_cast<int>(std::ceil(3.0 * sigma)));
  const double s2 = sigma * sigma;
  for (int dy = -k.radius; dy <= k.radius; ++dy)
    for (int dx = -k.radius; dx <= k.radius; ++dx)
      tap(k, dx, dy) = (dx * dx + dy * dy - 2.0 * s2) / s2 * gaussian(dx, dy, sigma, sigma);
  remove_mean(k);
  normalize_l1(k);
  return k;
}

Kernel bar(double theta) {
  constexpr double kLong = 3.0, kShort = 1.0;
  Kernel k = make_kernel(static_cast<int>(std::ceil(3.0 * kLong)));
  const double c = std::cos(theta), s = std::sin(theta);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const double along = dx * c + dy * s;
      const double across = -dx * s + dy * c;
      tap(k, dx, dy) = (across * across / (kShort * kShort) - 1.0) * gaussian(along, across, kLong, kShort);
    }
  }
  remove_mean(k);
  normalize_l1(k);
  return k;
}

const std::array<Kernel, layout::kTexture>& texture_bank() {
  static const std::array<Kernel, layout::kTexture> bank = [] {
    std::array<Kernel, layout::kTexture> b;
    const double pi = std::numbers::pi;
    int i = 0;
    for (double sigma : {1.0, 2.0})
      for (int o = 0; o < 4; ++o) b[i++] = oriented_derivative(sigma, o * pi / 4.0);
    for (double sigma : {1.0, std::sqrt(2.0), 2.0, 2.0 * std::sqrt(2.0)}) b[i++] = laplacian_of_gaussian(sigma);
    for (int o = 0; o < 3; ++o) b[i++] = bar(o * pi / 3.0);
    return b;
  }();
  return bank;
}

int derivative_bin(double magnitude) {
  int bin = 0;
  while (bin < 3 && magnitude >= layout::kDerivativeEdges[bin]) ++bin;
  return bin;
}

int orientation_bin(double du, double dv) {
  const double pi = std::numbers::pi;
  double angle = std::atan2(dv, du);
  if (angle < 0.0) angle += 2.0 * pi;
  const int bin = static_cast<int>(std::floor((angle + pi / 8.0) / (pi / 4.0)));
  return bin % layout::kOrientationBins;
}

GrayImage magnitude(const GrayImage& a, const GrayImage& b) {
  GrayImage out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = std::hypot(a.values[i], b.values[i]);
  return out;
}

void write_block(RegionFeatures& f, int offset, std::span<const double> block) {
  std::copy(block.begin(), block.end(), f.values.begin() + offset);
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const char* c : {"r", "g", "b", "h", "s", "v"}) n.push_back(std::string("color.") + c);
    for (int s = 0; s < 2; ++s)
      for (int o = 0; o < 4; ++o)
        n.push_back("texture.dog_s" + std::to_string(s + 1) + "_o" + std::to_string(o * 45));
    for (int i = 0; i < 4; ++i) n.push_back("texture.log" + std::to_string(i));
    for (int o = 0; o < 3; ++o) n.push_back("texture.bar_o" + std::to_string(o * 60));
    n.push_back("location.y");
    n.push_back("location.horizon");
    for (int off : kFlowOffsets) {
      const std::string p = "motion.o" + std::to_string(off) + ".";
      for (int b = 0; b < layout::kOrientationBins; ++b) n.push_back(p + "orient" + std::to_string(b));
      n.push_back(p + "mean_du");
      n.push_back(p + "mean_dv");
      n.push_back(p + "mean_mag");
      for (int size : layout::kSobelSizes) {
        for (const char* axis : {"dx", "dy"})
          for (int b = 0; b < layout::kDerivativeBins; ++b)
            n.push_back(p + "sobel" + std::to_string(size) + "_" + axis + std::to_string(b));
      }
    }
    for (const char* c : {"sky", "ground", "solid", "porous", "movable"}) n.push_back(std::string("geom.") + c);
    return n;
  }();
  return names;
}

std::span<const double> RegionFeatures::block(FeatureBlock b) const {
  switch (b) {
    case FeatureBlock::Color: return {values.data() + layout::kColorOffset, layout::kColor};
    case FeatureBlock::Texture: return {values.data() + layout::kTextureOffset, layout::kTexture};
    case FeatureBlock::Location: return {values.data() + layout::kLocationOffset, layout::kLocation};
    case FeatureBlock::Motion: return {values.data() + layout::kMotionOffset, layout::kMotion};
    case FeatureBlock::Geom: return {values.data() + layout::kGeomOffset, layout::kGeom};
  }
  return {};
}

const char* to_string(GeometricClass c) {
  switch (c) {
    case GeometricClass::Sky: return "sky";
    case GeometricClass::Ground: return "ground";
    case GeometricClass::Solid: return "solid";
    case GeometricClass::Porous: return "porous";
    case GeometricClass::Movable: return "movable";
  }
  return "unknown";
}

void GeometricContextMap::validate() const {
  if (confidence.size() != static_cast<std::size_t>(width) * height * kGeomClasses) {
    throw Error(ErrorKind::DimensionMismatch, "geometric context storage does not match its size");
  }
  for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
    double sum = 0.0;
    for (int c = 0; c < kGeomClasses; ++c) {
      const float v = at(p, c);
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw Error(ErrorKind::InvalidArgument, "geometric context confidence outside [0,1]");
      }
      sum += v;
    }
    if (sum > 1.0 + 1e-6) throw Error(ErrorKind::InvalidArgument, "geometric context confidences sum above 1");
  }
}

std::array<double, 3> rgb_to_hsv(double r, double g, double b) {
  r /= 255.0;
  g /= 255.0;
  b /= 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) h = std::fmod((g - b) / delta, 6.0);
    else if (mx == g) h = (b - r) / delta + 2.0;
    else h = (r - g) / delta + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

std::array<double, layout::kColor> color_features(const RgbImage& frame, PixelList pixels) {
  require_pixels(pixels, "color_features");
  std::array<double, layout::kColor> sum{};
  for (std::int32_t p : pixels) {
    const std::uint8_t* c = frame.px(static_cast<std::size_t>(p));
    const auto hsv = rgb_to_hsv(c[0], c[1], c[2]);
    for (int i = 0; i < 3; ++i) sum[i] += c[i] / 255.0;
    for (int i = 0; i < 3; ++i) sum[3 + i] += hsv[i];
  }
  for (double& v : sum) v /= static_cast<double>(pixels.size());
  return sum;
}

TextureResponses texture_responses(const RgbImage& frame) {
  GrayImage gray = to_gray(frame);
  for (float& v : gray.values) v /= 255.0f;
  TextureResponses out;
  const auto& bank = texture_bank();
  for (int i = 0; i < layout::kTexture; ++i) out.response[i] = filter2d(gray, bank[i]);
  return out;
}

std::array<double, layout::kTexture> texture_features(const TextureResponses& responses, PixelList pixels) {
  require_pixels(pixels, "texture_features");
  std::array<double, layout::kTexture> out{};
  for (int i = 0; i < layout::kTexture; ++i) {
    double s = 0.0;
    for (std::int32_t p : pixels) s += std::abs(responses.response[i].values[p]);
    out[i] = s / static_cast<double>(pixels.size());
  }
  return out;
}

std::array<double, layout::kTexture> texture_features(const RgbImage& frame, PixelList pixels) {
  return texture_features(texture_responses(frame), pixels);
}

std::array<double, layout::kLocation> location_features(PixelList pixels, int width, int height,
                                                        double horizon_row) {
  require_pixels(pixels, "location_features");
  double sum_y = 0.0;
  for (std::int32_t p : pixels) sum_y += p / width;
  const double mean_y = sum_y / static_cast<double>(pixels.size());
  return {mean_y / height, (mean_y - horizon_row) / height};
}

FlowDerivatives flow_derivatives(const FlowField& flow) {
  FlowDerivatives d;
  d.flow = &flow;
  GrayImage u(flow.width, flow.height), v(flow.width, flow.height);
  u.values = flow.du;
  v.values = flow.dv;
  for (int s = 0; s < 3; ++s) {
    const Kernel kx = sobel_x(layout::kSobelSizes[s]);
    const Kernel ky = sobel_y(layout::kSobelSizes[s]);
    d.dx[s] = magnitude(filter2d(u, kx), filter2d(v, kx));
    d.dy[s] = magnitude(filter2d(u, ky), filter2d(v, ky));
  }
  return d;
}

std::array<double, layout::kMotion> motion_features(std::span<const FlowDerivatives, 3> flows,
                                                    PixelList pixels) {
  require_pixels(pixels, "motion_features");
  std::array<double, layout::kMotion> out{};
  const double n = static_cast<double>(pixels.size());
  for (int k = 0; k < 3; ++k) {
    const FlowDerivatives& fd = flows[k];
    if (fd.flow == nullptr) throw Error(ErrorKind::InconsistentInput, "motion_features: missing flow");
    if (fd.flow->padded) continue;
    const FlowField& f = *fd.flow;
    double* g = out.data() + k * layout::kMotionPerOffset;
    double mass = 0.0;
    for (std::int32_t p : pixels) {
      const double du = f.du[p], dv = f.dv[p];
      const double mag = std::hypot(du, dv);
      if (mag > 0.0) g[orientation_bin(du, dv)] += mag;
      mass += mag;
      g[8] += du;
      g[9] += dv;
      g[10] += mag;
    }
    if (mass > 0.0)
      for (int b = 0; b < layout::kOrientationBins; ++b) g[b] /= mass;
    g[8] /= n;
    g[9] /= n;
    g[10] /= n;
    double* h = g + 11;
    for (int s = 0; s < 3; ++s, h += 2 * layout::kDerivativeBins) {
      for (std::int32_t p : pixels) {
        h[derivative_bin(fd.dx[s].values[p])] += 1.0;
        h[layout::kDerivativeBins + derivative_bin(fd.dy[s].values[p])] += 1.0;
      }
      for (int b = 0; b < 2 * layout::kDerivativeBins; ++b) h[b] /= n;
    }
  }
  return out;
}

std::array<double, layout::kMotion> motion_features(std::span<const FlowField, 3> flows, PixelList pixels) {
  std::array<FlowDerivatives, 3> d;
  for (int k = 0; k < 3; ++k) d[k] = flow_derivatives(flows[k]);
  return motion_features(std::span<const FlowDerivatives, 3>(d), pixels);
}

std::array<double, layout::kGeom> geometric_features(const GeometricContextMap& gc, PixelList pixels,
                                                     int width, int height) {
  require_same_size(width, height, gc.width, gc.height, "geometric context map");
  require_pixels(pixels, "geometric_features");
  std::array<double, layout::kGeom> out{};
  for (std::int32_t p : pixels)
    for (int c = 0; c < kGeomClasses; ++c) out[c] += gc.at(static_cast<std::size_t>(p), c);
  for (double& v : out) v /= static_cast<double>(pixels.size());
  return out;
}

RegionFeatures assemble_features(const FeatureBlocks& blocks) {
  auto missing = [](const char* name) {
    return Error(ErrorKind::InconsistentInput, std::string("assemble_features: missing ") + name + " block");
  };
  if (!blocks.color) throw missing("color");
  if (!blocks.texture) throw missing("texture");
  if (!blocks.location) throw missing("location");
  if (!blocks.motion) throw missing("motion");
  if (!blocks.geom) throw missing("geom");
  RegionFeatures f;
  write_block(f, layout::kColorOffset, *blocks.color);
  write_block(f, layout::kTextureOffset, *blocks.texture);
  write_block(f, layout::kLocationOffset, *blocks.location);
  write_block(f, layout::kMotionOffset, *blocks.motion);
  write_block(f, layout::kGeomOffset, *blocks.geom);
  return f;
}

std::vector<FeatureRow> extract_video_features(const VideoVolume& video, const SegmentationLabelMap& labels,
                                               const RegionTable& regions,
                                               std::span<const FlowField> backward,
                                               std::span<const GeometricContextMap> gc,
                                               double horizon_row) {
  video.validate();
  const int W = video.width(), H = video.height(), T = video.frame_count();
  require_same_size(W, H, labels.width, labels.height, "label map");
  if (labels.frames != T || static_cast<int>(backward.size()) != T || static_cast<int>(gc.size()) != T) {
    throw Error(ErrorKind::InconsistentInput,
                "extract_video_features: labels, flows and geometric context must cover every frame");
  }
  std::vector<FeatureRow> rows;
  for (int t = 0; t < T; ++t) {
    const TextureResponses tex = texture_responses(video.frames[t]);
    std::array<FlowField, 3> flows;
    std::array<FlowDerivatives, 3> derivs;
    for (int k = 0; k < 3; ++k) {
      flows[k] = flow_to(backward, t, kFlowOffsets[k]);
      derivs[k] = flow_derivatives(flows[k]);
    }
    for (int r = 0; r < static_cast<int>(regions.regions.size()); ++r) {
      const auto& pixels = regions.regions[r].pixels[t];
      if (pixels.empty()) continue;
      FeatureBlocks b;
      b.color = color_features(video.frames[t], pixels);
      b.texture = texture_features(tex, pixels);
      b.location = location_features(pixels, W, H, horizon_row);
      b.motion = motion_features(std::span<const FlowDerivatives, 3>(derivs), pixels);
      b.geom = geometric_features(gc[t], pixels, W, H);
      rows.push_back({r, t, static_cast<std::int64_t>(pixels.size()), assemble_features(b)});
    }
  }
  return rows;
}

}  // namespace planedepth
