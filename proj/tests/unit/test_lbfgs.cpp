#include <gtest/gtest.h>

#include <cmath>

#include "planedepth/error.hpp"
#include "planedepth/lbfgs.hpp"

namespace pd = planedepth;

TEST(Lbfgs, IllConditionedQuadratic) {
  Eigen::VectorXd scale(4);
  scale << 1.0, 10.0, 100.0, 1000.0;
  Eigen::VectorXd target(4);
  target << 1.0, -2.0, 3.0, -4.0;
  const auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const Eigen::VectorXd d = x - target;
    g = 2.0 * scale.cwiseProduct(d);
    return d.dot(scale.cwiseProduct(d));
  };
  const auto r = pd::minimize_lbfgs(f, Eigen::VectorXd::Zero(4));
  EXPECT_TRUE(r.converged) << r.stop_reason;
  EXPECT_LT((r.x - target).norm(), 1e-7);
}

TEST(Lbfgs, RosenbrockWithMonotoneHistory) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  pd::LbfgsConfig cfg;
  cfg.max_iterations = 2000;
  const auto r = pd::minimize_lbfgs(f, x0, cfg);
  EXPECT_NEAR(r.x(0), 1.0, 1e-5);
  EXPECT_NEAR(r.x(1), 1.0, 1e-5);
  ASSERT_EQ(r.history.size(), static_cast<std::size_t>(r.iterations) + 1);
  for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1]);
}

TEST(Lbfgs, StartAtOptimumStopsImmediately) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  const auto r = pd::minimize_lbfgs(f, Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Lbfgs, IterationLimitIsReported) {
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g(0) = std::cos(x(0)) + 0.1;
    return std::sin(x(0)) + 0.1 * x(0);
  };
  pd::LbfgsConfig cfg;
  cfg.max_iterations = 2;
  cfg.f_tol = 0.0;
  const auto r = pd::minimize_lbfgs(f, Eigen::VectorXd::Constant(1, 0.0), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
}

TEST(Lbfgs, NonFiniteStartThrows) {
  const auto f = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Zero(1);
    return std::nan("");
  };
  EXPECT_THROW(pd::minimize_lbfgs(f, Eigen::VectorXd::Zero(1)), pd::Error);
  pd::LbfgsConfig bad;
  bad.memory = 0;
  EXPECT_THROW(pd::minimize_lbfgs(f, Eigen::VectorXd::Zero(1), bad), pd::Error);
}
