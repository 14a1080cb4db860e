#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/error.hpp"
#include "support.hpp"

namespace pd = planedepth;
using pdtest::Vec3;

namespace {

Eigen::VectorXd stack(const std::vector<pd::PlaneParams>& planes) {
  Eigen::VectorXd x(3 * planes.size());
  for (std::size_t i = 0; i < planes.size(); ++i) x.segment<3>(3 * i) = planes[i].alpha;
  return x;
}

// Pixel-loop oracle of the full energy.
double oracle_energy(const pd::MrfProblem& p, const Eigen::VectorXd& x) {
  double e = 0.0;
  const auto a = [&](int i) { return Vec3(x.segment<3>(3 * i)); };
  for (std::size_t i = 0; i < p.regions.size(); ++i)
    for (std::size_t k = 0; k < p.regions[i].rays.size(); ++k) {
      const double r = p.regions[i].depths[k] * p.regions[i].rays[k].dot(a(i)) - 1.0;
      e += r * r;
    }
  for (const auto& pr : p.pairs) {
    const auto& ri = p.regions[pr.a];
    const auto& rj = p.regions[pr.b];
    const Vec3 delta = a(pr.a) - a(pr.b);
    double c = 0.0;
    for (const auto& r : pr.boundary_rays) c += std::pow(r.dot(delta), 2) * ri.mean_depth * rj.mean_depth;
    e += p.weights.lambda_conn * pr.y * c / pr.boundary_rays.size();
    e += p.weights.lambda_cop * pr.y * std::pow(rj.center_ray.dot(delta) * rj.mean_depth, 2);
    if (p.weights.symmetric_coplanarity)
      e += p.weights.lambda_cop * pr.y * std::pow(ri.center_ray.dot(delta) * ri.mean_depth, 2);
  }
  return e;
}

}  // namespace

TEST(DepthMrf, FractionalErrorClosedForm) {
  const Vec3 r = Vec3::UnitZ();
  EXPECT_DOUBLE_EQ(pd::fractional_error(20.0, r, Vec3(0, 0, 0.1)), 1.0);
  EXPECT_DOUBLE_EQ(pd::fractional_error(10.0, r, Vec3(0, 0, 0.1)), 0.0);
}

TEST(DepthMrf, EnergyMatchesOracleOnRandomProblems) {
  pdtest::Rng rng(21);
  for (int n = 0; n < 50; ++n) {
    const auto p = pdtest::random_problem(rng, 8);
    const auto x = pdtest::random_point(rng, p);
    const double e = pd::total_energy(p, x);
    EXPECT_NEAR(e, oracle_energy(p, x), 1e-10 * std::max(1.0, e));
    const auto b = pd::energy_breakdown(p, x);
    EXPECT_NEAR(b.data + p.weights.lambda_conn * b.connectivity + p.weights.lambda_cop * b.coplanarity, e,
                1e-10 * std::max(1.0, e));
    EXPECT_DOUBLE_EQ(b.total, e);
  }
}

TEST(DepthMrf, GradientMatchesFiniteDifferences) {
  pdtest::Rng rng(22);
  for (int n = 0; n < 30; ++n) {
    const auto p = pdtest::random_problem(rng, 6);
    const auto x = pdtest::random_point(rng, p);
    Eigen::VectorXd g;
    pd::total_energy(p, x, &g);
    const auto num = pdtest::numeric_gradient([&](const Eigen::VectorXd& z) { return pd::total_energy(p, z); }, x);
    EXPECT_LT((g - num).norm() / std::max(g.norm(), 1e-12), 1e-5);
  }
}

TEST(DepthMrf, ZeroGateDecouplesRegions) {
  // With every gate at 0 each region minimizes its own data term, a least
  // squares problem in d r^T alpha = 1 solved here through the normal equations.
  pdtest::Rng rng(23);
  for (int n = 0; n < 10; ++n) {
    auto p = pdtest::random_problem(rng, 5);
    for (auto& pr : p.pairs) pr.y = 0.0;
    const auto s = pd::solve_mrf(p);
    for (std::size_t i = 0; i < p.regions.size(); ++i) {
      const auto& r = p.regions[i];
      Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
      Vec3 b = Vec3::Zero();
      for (std::size_t k = 0; k < r.rays.size(); ++k) {
        A += r.depths[k] * r.depths[k] * r.rays[k] * r.rays[k].transpose();
        b += r.depths[k] * r.rays[k];
      }
      const Vec3 expect = A.ldlt().solve(b);
      EXPECT_LT((s.planes[i].alpha - expect).norm() / expect.norm(), 1e-6);
    }
  }
}

TEST(DepthMrf, ZeroGateWithExactUnariesReproducesIndependentFits) {
  pdtest::Rng rng(26);
  auto p = pdtest::random_problem(rng, 5);
  for (auto& r : p.regions) {
    const auto plane = pdtest::random_plane(rng);
    for (std::size_t k = 0; k < r.rays.size(); ++k) r.depths[k] = 1.0 / r.rays[k].dot(plane.alpha);
  }
  for (auto& pr : p.pairs) pr.y = 0.0;
  const auto fits = pd::independent_fits(p);
  const auto s = pd::solve_mrf(p);
  for (std::size_t i = 0; i < fits.size(); ++i)
    EXPECT_LT((s.planes[i].alpha - fits[i].alpha).norm() / fits[i].alpha.norm(), 1e-6);
}

TEST(DepthMrf, SolveIsMonotoneAndNoWorseThanIndependentFits) {
  pdtest::Rng rng(24);
  for (int n = 0; n < 20; ++n) {
    const auto p = pdtest::random_problem(rng, 8);
    const auto s = pd::solve_mrf(p);
    for (std::size_t k = 1; k < s.energy_history.size(); ++k)
      EXPECT_LE(s.energy_history[k], s.energy_history[k - 1]);
    EXPECT_LE(s.energy, pd::total_energy(p, stack(pd::independent_fits(p))) + 1e-12);
  }
}

TEST(DepthMrf, ExactUnariesGiveZeroEnergyAtTruth) {
  // Two coplanar regions with exact depths: the shared plane has zero energy.
  pdtest::Rng rng(25);
  const auto plane = pdtest::random_plane(rng);
  pd::MrfProblem p;
  for (int r = 0; r < 2; ++r) {
    pd::MrfRegion reg;
    reg.id = r;
    double s = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Vec3 ray = pdtest::random_ray(rng);
      reg.rays.push_back(ray);
      reg.depths.push_back(1.0 / ray.dot(plane.alpha));
      s += reg.depths.back();
    }
    reg.mean_depth = s / 10;
    p.regions.push_back(reg);
  }
  p.pairs.push_back({0, 1, {pdtest::random_ray(rng)}, 1.0});
  const auto s = pd::solve_mrf(p);
  EXPECT_LT(s.energy, 1e-12);
  for (const auto& pl : s.planes) EXPECT_LT((pl.alpha - plane.alpha).norm() / plane.alpha.norm(), 1e-6);
}

TEST(DepthMrf, BuildProblemSamplesAndPairs) {
  // Left half region 0 at 10 m, right half region 1 at 20 m.
  pd::SegmentationLabelMap L(20, 10, 1);
  pd::DepthMap unary(20, 10);
  for (int i = 0; i < 200; ++i) {
    L.labels[i] = (i % 20) < 10 ? 0 : 1;
    unary.values[i] = L.labels[i] == 0 ? 10.0f : 20.0f;
    unary.valid[i] = 1;
  }
  auto es = pd::extract_edgelets(L, 0);
  es[0].p_non_occl = 0.25;
  const auto K = pd::CameraIntrinsics::defaults_for(20, 10);
  pd::SamplingParams sp;
  sp.max_samples = 30;
  const auto p = pd::build_mrf_problem(L, 0, unary, es, K, {}, sp);
  ASSERT_EQ(p.regions.size(), 2u);
  EXPECT_EQ(p.regions[0].rays.size(), 30u);
  EXPECT_DOUBLE_EQ(p.regions[1].mean_depth, 20.0);
  ASSERT_EQ(p.pairs.size(), 1u);
  EXPECT_EQ(p.pairs[0].y, 0.25);
  EXPECT_EQ(p.pairs[0].boundary_rays.size(), 20u);  // 10 rows, both sides
  sp.max_samples = 0;
  EXPECT_EQ(pd::build_mrf_problem(L, 0, unary, es, K, {}, sp).regions[0].rays.size(), 100u);
  // Invalidating region 1 drops it and its pair.
  for (int i = 0; i < 200; ++i)
    if (L.labels[i] == 1) unary.valid[i] = 0;
  const auto q = pd::build_mrf_problem(L, 0, unary, es, K);
  EXPECT_EQ(q.regions.size(), 1u);
  EXPECT_TRUE(q.pairs.empty());
}

TEST(DepthMrf, ValidateCatchesBrokenProblems) {
  pd::MrfProblem p;
  p.regions.resize(1);
  p.regions[0].rays = {Vec3::UnitZ()};
  p.regions[0].depths = {1.0, 2.0};
  EXPECT_THROW(p.validate(), pd::Error);
  p.regions[0].depths = {1.0};
  p.pairs.push_back({0, 3, {Vec3::UnitZ()}, 0.5});
  EXPECT_THROW(p.validate(), pd::Error);
  p.pairs[0] = {0, 0, {Vec3::UnitZ()}, 1.5};
  EXPECT_THROW(p.validate(), pd::Error);
}

TEST(DepthMrf, MedianSmoothingRemovesSpike) {
  pd::PlaneTable t(5, std::vector<std::optional<pd::PlaneParams>>(1));
  for (int f = 0; f < 5; ++f) t[f][0] = pd::PlaneParams{Vec3(0, 0, 0.1)};
  t[2][0] = pd::PlaneParams{Vec3(5, 5, 5)};
  const auto s = pd::smooth_plane_table(t, 5);
  EXPECT_EQ(s[2][0]->alpha, Vec3(0, 0, 0.1));
  const auto id = pd::smooth_plane_table(t, 1);
  EXPECT_EQ(id[2][0]->alpha, Vec3(5, 5, 5));
}

TEST(DepthMrf, MedianSmoothingSkipsAbsentFrames) {
  pd::PlaneTable t(3, std::vector<std::optional<pd::PlaneParams>>(1));
  t[0][0] = pd::PlaneParams{Vec3(0, 0, 0.1)};
  t[2][0] = pd::PlaneParams{Vec3(0, 0, 0.3)};
  const auto s = pd::smooth_plane_table(t, 5);
  EXPECT_FALSE(s[1][0].has_value());
  EXPECT_NEAR(s[0][0]->alpha.z(), 0.2, 1e-15);  // median of two is their mean
}
