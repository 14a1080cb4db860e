#include "planedepth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "planedepth/occlusion.hpp"

namespace planedepth {
namespace {

std::uint64_t mix(std::uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ull ^
                                         mix(static_cast<std::uint64_t>(iy) + 0x632be59bd9b4e019ull)));
  return static_cast<double>(h >> 11) / static_cast<double>(1ull << 53) * 2.0 - 1.0;
}

double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double sx = smooth(x - fx), sy = smooth(y - fy);
  const double top = (1 - sx) * lattice(seed, ix, iy) + sx * lattice(seed, ix + 1, iy);
  const double bottom = (1 - sx) * lattice(seed, ix, iy + 1) + sx * lattice(seed, ix + 1, iy + 1);
  return (1 - sy) * top + sy * bottom;
}

double pattern_value(const SceneRegion& r, std::uint64_t seed, double u, double v) {
  const double s = std::max(r.pattern_scale, 1e-3);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  switch (r.pattern) {
    case TexturePattern::Flat:
      return 0.0;
    case TexturePattern::Stripes:
      return std::sin(kTwoPi * (u * std::cos(r.pattern_angle) + v * std::sin(r.pattern_angle)) / s);
    case TexturePattern::Checker:
      return std::sin(kTwoPi * u / s) * std::sin(kTwoPi * v / s);
    case TexturePattern::Noise:
      return value_noise(seed, u / s, v / s);
  }
  return 0.0;
}

/// Offset of the camera relative to the region's moving frame at time t.
Vec3 relative_offset(const SyntheticScene& scene, int owner, int t) {
  return scene.camera_velocity * t - scene.regions[owner].velocity * t;
}

}  // namespace

const char* to_string(TexturePattern p) {
  switch (p) {
    case TexturePattern::Flat: return "flat";
    case TexturePattern::Stripes: return "stripes";
    case TexturePattern::Checker: return "checker";
    case TexturePattern::Noise: return "noise";
  }
  return "?";
}

TexturePattern texture_pattern_from_string(const std::string& s) {
  if (s == "flat") return TexturePattern::Flat;
  if (s == "stripes") return TexturePattern::Stripes;
  if (s == "checker") return TexturePattern::Checker;
  if (s == "noise") return TexturePattern::Noise;
  throw Error(ErrorKind::InvalidArgument, "unknown texture pattern '" + s + "'");
}

int plane_owner(const SyntheticScene& scene, int region) {
  int r = region;
  for (std::size_t guard = 0; scene.regions[r].parent >= 0; ++guard) {
    if (guard > scene.regions.size()) throw Error(ErrorKind::InvalidArgument, "scene: marking parents form a cycle");
    r = scene.regions[r].parent;
  }
  return r;
}

void SyntheticScene::validate() const {
  if (width < 2 || height < 2) throw Error(ErrorKind::InvalidArgument, "scene: frame must be at least 2x2");
  K.validate();
  if (regions.empty()) throw Error(ErrorKind::InvalidArgument, "scene: no regions");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    if (!r.plane.alpha.allFinite() || r.plane.alpha.norm() == 0.0) {
      throw Error(ErrorKind::InvalidArgument, "scene: region '" + r.name + "' has a degenerate plane");
    }
    if (!(r.x0 < r.x1 && r.y0 < r.y1)) {
      throw Error(ErrorKind::InvalidArgument, "scene: region '" + r.name + "' has an empty extent");
    }
    if (r.parent >= static_cast<int>(regions.size()) || r.parent == static_cast<int>(i)) {
      throw Error(ErrorKind::InvalidArgument, "scene: region '" + r.name + "' has an invalid parent");
    }
    plane_owner(*this, static_cast<int>(i));
  }
  if (pixel_noise < 0.0 || gc_noise < 0.0 || gc_noise > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "scene: noise levels out of range");
  }
}

SyntheticVideo generate_scene(const SyntheticScene& scene, int frames) {
  scene.validate();
  if (frames < 1) throw Error(ErrorKind::InvalidArgument, "generate_scene: need at least one frame");
  const int W = scene.width, H = scene.height, R = static_cast<int>(scene.regions.size());
  const CameraIntrinsics& K = scene.K;

  std::vector<int> owner(R), nesting(R, 0);
  for (int r = 0; r < R; ++r) {
    owner[r] = plane_owner(scene, r);
    for (int p = scene.regions[r].parent; p >= 0; p = scene.regions[p].parent) ++nesting[r];
  }

  SyntheticVideo out;
  out.K = K;
  out.labels = SegmentationLabelMap(W, H, frames);
  out.planes.assign(frames, std::vector<std::optional<PlaneParams>>(R));
  for (const auto& r : scene.regions) out.region_classes.push_back(r.geom_class);
  const std::vector<Ray> rays = pixel_rays(K, W, H);
  std::vector<std::int64_t> seen(R, 0);

  for (int t = 0; t < frames; ++t) {
    std::vector<Vec3> alpha_t(R), offset(R);
    for (int r = 0; r < R; ++r) {
      offset[r] = relative_offset(scene, owner[r], t);
      const Vec3& a = scene.regions[owner[r]].plane.alpha;
      const double denom = 1.0 - a.dot(offset[r]);
      if (!(denom > 0.0)) {
        throw Error(ErrorKind::InconsistentInput, "generate_scene: the camera crosses the plane of region '" +
                                                      scene.regions[r].name + "' in frame " + std::to_string(t));
      }
      alpha_t[r] = a / denom;
      out.planes[t][r] = PlaneParams{alpha_t[r]};
    }

    RgbImage img(W, H);
    std::mt19937_64 noise_rng(mix(scene.seed) ^ mix(static_cast<std::uint64_t>(t) + 17));
    std::normal_distribution<double> noise(0.0, 1.0);
    auto labels = out.labels.frame(t);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        const Vec3& ray = rays[p].direction;
        int best = -1;
        double best_depth = 0.0;
        double bu = 0.0, bv = 0.0;
        for (int r = 0; r < R; ++r) {
          const double s = ray.dot(alpha_t[r]);
          if (!(s > 0.0)) continue;
          const double d = 1.0 / s;
          const Vec3 X0 = d * ray + offset[r];
          if (!(X0.z() > 0.0)) continue;
          const double u = K.fu * X0.x() / X0.z() + K.u0;
          const double v = K.fv * X0.y() / X0.z() + K.v0;
          const auto& reg = scene.regions[r];
          if (u < reg.x0 || u >= reg.x1 || v < reg.y0 || v >= reg.y1) continue;
          if (best < 0 || d < best_depth || (d == best_depth && nesting[r] > nesting[best])) {
            best = r;
            best_depth = d;
            bu = u;
            bv = v;
          }
        }
        if (best < 0) {
          throw Error(ErrorKind::InconsistentInput, "generate_scene: pixel (" + std::to_string(x) + "," +
                                                        std::to_string(y) + ") of frame " + std::to_string(t) +
                                                        " hits no region");
        }
        labels[p] = best;
        ++seen[best];
        const auto& reg = scene.regions[best];
        const double pv = pattern_value(reg, mix(scene.seed + 1000003ull * (best + 1)), bu, bv);
        std::uint8_t* px = img.px(x, y);
        for (int c = 0; c < 3; ++c) {
          double v = reg.color[c] + reg.pattern_contrast * pv;
          if (scene.pixel_noise > 0.0) v += scene.pixel_noise * noise(noise_rng);
          px[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    out.video.frames.push_back(std::move(img));
    out.depth.push_back(render_depth(labels, W, H, out.planes[t], K));

    GeometricContextMap gc(W, H);
    std::mt19937_64 gc_rng(mix(scene.seed ^ 0x5bd1e995ull) ^ mix(static_cast<std::uint64_t>(t) + 91));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      std::array<double, kGeomClasses> u{};
      double total = 0.0;
      for (double& v : u) total += (v = unit(gc_rng));
      const int cls = static_cast<int>(scene.regions[labels[p]].geom_class);
      for (int c = 0; c < kGeomClasses; ++c) {
        const double conf = (1.0 - scene.gc_noise) * (c == cls ? 1.0 : 0.0) + scene.gc_noise * u[c] / total;
        gc.at(p, c) = static_cast<float>(conf);
      }
    }
    out.gc.push_back(std::move(gc));
  }

  for (int r = 0; r < R; ++r)
    if (seen[r] == 0) {
      throw Error(ErrorKind::InconsistentInput, "generate_scene: region '" + scene.regions[r].name +
                                                    "' is never visible");
    }

  for (int t = 0; t < frames; ++t)
    for (const auto& e : extract_edgelets(out.labels, t)) {
      const auto label = occlusion_label(e, out.labels, out.depth[t]);
      if (label) out.occlusion.push_back({t, e.i, e.j, *label});
    }
  return out;
}

std::string check_scene_contract(const SyntheticScene& scene, const SyntheticVideo& video, int min_pixels) {
  const int W = video.labels.width, H = video.labels.height;
  const CameraIntrinsics& K = video.K;
  const int R = static_cast<int>(scene.regions.size());
  for (int t = 0; t < video.labels.frames; ++t) {
    std::vector<std::vector<std::int32_t>> pixels(R);
    const auto f = video.labels.frame(t);
    for (std::int32_t p = 0; p < static_cast<std::int32_t>(f.size()); ++p) pixels[f[p]].push_back(p);
    for (int r = 0; r < R; ++r) {
      if (static_cast<int>(pixels[r].size()) < min_pixels) {
        return "region " + std::to_string(r) + " has " + std::to_string(pixels[r].size()) + " pixels in frame " +
               std::to_string(t);
      }
      std::vector<Ray> rays;
      std::vector<double> depths;
      for (std::int32_t p : pixels[r]) {
        rays.push_back(pixel_ray(K, p % W, p / W));
        depths.push_back(video.depth[t].values[p]);
      }
      try {
        fit_plane(rays, depths);
      } catch (const Error&) {
        return "region " + std::to_string(r) + " is degenerate in frame " + std::to_string(t);
      }
    }
    for (std::size_t p = 0; p < f.size(); ++p) {
      const Ray ray = pixel_ray(K, static_cast<double>(p % W), static_cast<double>(p / W));
      const double s = ray.direction.dot(video.planes[t][f[p]]->alpha);
      if (!(s > 0.0) || 1.0 / s >= kMaxDepth) return "depth clamped in frame " + std::to_string(t);
    }
  }
  (void)H;
  for (const auto& o : video.occlusion) {
    const bool coplanar = plane_owner(scene, o.i) == plane_owner(scene, o.j);
    if (coplanar != (o.label == 1)) {
      return "boundary (" + std::to_string(o.i) + "," + std::to_string(o.j) + ") in frame " +
             std::to_string(o.frame) + (coplanar ? " is coplanar but occluding" : " is continuous but not coplanar");
    }
  }
  return {};
}

SyntheticScene random_scene(std::uint64_t seed, int frames, const RandomSceneOptions& o) {
  if (o.min_regions < 1 || o.max_regions < o.min_regions) {
    throw Error(ErrorKind::InvalidArgument, "random_scene: bad region count range");
  }
  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto coin = [&](double p) { return uni(0.0, 1.0) < p; };
    auto irange = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

    SyntheticScene s;
    s.width = o.width;
    s.height = o.height;
    s.K = CameraIntrinsics::defaults_for(o.width, o.height);
    s.pixel_noise = o.pixel_noise;
    s.gc_noise = o.gc_noise;
    s.seed = mix(seed * 0x100000001b3ull + static_cast<std::uint64_t>(attempt));
    const double W = o.width, H = o.height, f = s.K.fv;

    auto random_look = [&](SceneRegion& r) {
      for (auto& c : r.color) c = static_cast<std::uint8_t>(irange(30, 225));
      r.pattern = static_cast<TexturePattern>(irange(1, 3));
      r.pattern_scale = uni(3.0, 9.0);
      r.pattern_contrast = uni(15.0, 35.0);
      r.pattern_angle = uni(0.0, std::numbers::pi);
    };

    const int target = irange(o.min_regions, o.max_regions);
    SceneRegion sky;
    sky.name = "sky";
    sky.plane.alpha = Vec3(0.0, 0.0, 1.0 / uni(55.0, 62.0));
    sky.geom_class = GeometricClass::Sky;
    random_look(sky);
    s.regions.push_back(sky);

    if (o.ground && target >= 2 && coin(0.8)) {
      SceneRegion g;
      g.name = "ground";
      const double h = uni(1.4, 2.0), zmax = uni(16.0, 28.0);
      g.plane.alpha = Vec3(0.0, 1.0 / h, 0.0);
      g.y0 = s.K.v0 + f * h / zmax;
      g.geom_class = GeometricClass::Ground;
      random_look(g);
      s.regions.push_back(g);
    }

    std::vector<int> objects;
    while (static_cast<int>(s.regions.size()) < target) {
      const bool marking = o.markings && !objects.empty() && coin(0.3);
      if (marking) {
        const int parent = objects[irange(0, static_cast<int>(objects.size()) - 1)];
        const SceneRegion& p = s.regions[parent];
        const double pw = p.x1 - p.x0, ph = p.y1 - p.y0;
        if (pw < 16 || ph < 16) continue;
        SceneRegion m;
        m.name = "marking" + std::to_string(s.regions.size());
        m.parent = parent;
        m.plane = p.plane;
        m.geom_class = p.geom_class;
        random_look(m);
        const double mw = uni(6.0, pw - 8.0), mh = uni(6.0, ph - 8.0);
        m.x0 = std::floor(uni(p.x0 + 3.0, p.x1 - 3.0 - mw));
        m.y0 = std::floor(uni(p.y0 + 3.0, p.y1 - 3.0 - mh));
        m.x1 = m.x0 + std::round(mw);
        m.y1 = m.y0 + std::round(mh);
        s.regions.push_back(m);
        continue;
      }
      SceneRegion obj;
      obj.name = "object" + std::to_string(s.regions.size());
      const int kind = irange(0, 2);
      double z = 0.0;
      if (kind == 0) {
        obj.geom_class = GeometricClass::Movable;
        z = uni(5.0, 11.0);
      } else if (kind == 1) {
        obj.geom_class = GeometricClass::Porous;
        z = uni(14.0, 22.0);
      } else {
        obj.geom_class = GeometricClass::Solid;
        z = uni(26.0, 42.0);
      }
      random_look(obj);
      const double w = uni(W / 5.0, W / 2.5), h = uni(H / 4.0, H / 2.0);
      obj.x0 = std::floor(uni(2.0, W - 2.0 - w));
      obj.y0 = std::floor(uni(2.0, H - 2.0 - h));
      obj.x1 = obj.x0 + std::round(w);
      obj.y1 = obj.y0 + std::round(h);
      const double cu = 0.5 * (obj.x0 + obj.x1), cv = 0.5 * (obj.y0 + obj.y1);
      const Vec3 P((cu - s.K.u0) / s.K.fu * z, (cv - s.K.v0) / s.K.fv * z, z);
      Vec3 n(0.0, 0.0, 1.0);
      if (coin(0.5)) n = Vec3(uni(-o.max_slant, o.max_slant), uni(-o.max_slant, o.max_slant), 1.0);
      obj.plane.alpha = n / n.dot(P);
      if (obj.geom_class == GeometricClass::Movable && coin(0.5)) obj.velocity = Vec3(uni(-0.08, 0.08), 0.0, 0.0);
      objects.push_back(static_cast<int>(s.regions.size()));
      s.regions.push_back(obj);
    }
    if (!coin(o.static_probability)) {
      const double speed = uni(0.3, 1.0) * o.max_pan;
      s.camera_velocity = Vec3(coin(0.5) ? speed : -speed, 0.0, 0.0);
    }

    try {
      const SyntheticVideo v = generate_scene(s, frames);
      if (check_scene_contract(s, v, o.min_pixels).empty()) return s;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorKind::InvalidArgument, "random_scene: no valid scene within " + std::to_string(o.max_attempts) +
                                              " attempts; relax the options");
}

}  // namespace planedepth
