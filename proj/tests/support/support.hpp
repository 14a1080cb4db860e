#pragma once

// Hand-rolled generators and fixtures shared by unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/geometry.hpp"
#include "planedepth/raster.hpp"

namespace pdtest {

using planedepth::Vec3;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// A plane facing the camera: unit normal with positive z, distance 2..60 m.
inline planedepth::PlaneParams random_plane(Rng& rng) {
  Vec3 n(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1.0);
  n.normalize();
  return {n / rng.uniform(2.0, 60.0)};
}

/// Unit ray within a 0.5 rad cone around +z.
inline Vec3 random_ray(Rng& rng) {
  return Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.4, 0.4), 1.0).normalized();
}

/// Random problem with 2..max_regions regions; depths follow random planes
/// with up to 20% noise so the optimum is not the trivial zero-energy point.
inline planedepth::MrfProblem random_problem(Rng& rng, int max_regions) {
  planedepth::MrfProblem p;
  const int R = rng.integer(2, max_regions);
  for (int r = 0; r < R; ++r) {
    planedepth::MrfRegion reg;
    reg.id = r;
    const auto plane = random_plane(rng);
    const int n = rng.integer(3, 25);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const Vec3 ray = random_ray(rng);
      const double d = 1.0 / ray.dot(plane.alpha) * std::exp(0.2 * rng.normal());
      reg.rays.push_back(ray);
      reg.depths.push_back(d);
      sum += d;
    }
    reg.center_ray = random_ray(rng);
    reg.mean_depth = sum / n;
    p.regions.push_back(reg);
  }
  for (int a = 0; a < R; ++a)
    for (int b = a + 1; b < R; ++b) {
      if (!rng.coin(0.6)) continue;
      planedepth::MrfPair pair;
      pair.a = a;
      pair.b = b;
      pair.y = rng.uniform(0.0, 1.0);
      const int n = rng.integer(1, 12);
      for (int k = 0; k < n; ++k) pair.boundary_rays.push_back(random_ray(rng));
      p.pairs.push_back(pair);
    }
  p.weights.lambda_conn = rng.uniform(0.1, 3.0);
  p.weights.lambda_cop = rng.uniform(0.1, 3.0);
  p.weights.symmetric_coplanarity = rng.coin();
  return p;
}

/// Stacked plane parameters near each region's fit, perturbed.
inline Eigen::VectorXd random_point(Rng& rng, const planedepth::MrfProblem& p) {
  Eigen::VectorXd x(3 * p.regions.size());
  for (std::size_t i = 0; i < p.regions.size(); ++i) {
    const double s = 1.0 / p.regions[i].mean_depth;
    for (int c = 0; c < 3; ++c) x(3 * i + c) = s * rng.uniform(-1.0, 1.0);
    x(3 * i + 2) += s;
  }
  return x;
}

/// Central differences with a per-coordinate step.
template <class F>
Eigen::VectorXd numeric_gradient(F f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * std::max(std::abs(x(k)), 1e-3);
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("planedepth_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Mean and max per-pixel |d - d_hat| / d over pixels valid in gt.
struct RelError {
  double mean = 0.0;
  double max = 0.0;
};

inline RelError relative_error(const std::vector<planedepth::DepthMap>& pred,
                               const std::vector<planedepth::DepthMap>& gt) {
  RelError e;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < gt.size(); ++t)
    for (std::size_t i = 0; i < gt[t].size(); ++i) {
      if (!gt[t].valid[i]) continue;
      const double d = gt[t].values[i];
      const double dh = pred[t].valid[i] ? pred[t].values[i] : planedepth::kMaxDepth;
      const double r = std::abs(d - dh) / d;
      sum += r;
      e.max = std::max(e.max, r);
      ++n;
    }
  e.mean = n ? sum / static_cast<double>(n) : 0.0;
  return e;
}

}  // namespace pdtest
