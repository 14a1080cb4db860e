#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "planedepth/error.hpp"
#include "planedepth/forest.hpp"
#include "support.hpp"

namespace pd = planedepth;

namespace {

pd::FeatureMatrix uniform_matrix(pdtest::Rng& rng, int rows, int cols) {
  pd::FeatureMatrix X(rows, cols);
  for (auto& v : X.data) v = rng.uniform(0.0, 1.0);
  return X;
}

pd::ForestParams small(std::uint64_t seed) {
  pd::ForestParams p;
  p.n_trees = 20;
  p.n_random_features_per_node = 3;
  p.rng_seed = seed;
  return p;
}

}  // namespace

TEST(Forest, StepFunctionIsLearnedExactly) {
  pdtest::Rng rng(1);
  auto X = uniform_matrix(rng, 400, 3);
  std::vector<double> y(400);
  for (int i = 0; i < 400; ++i) y[i] = X.at(i, 1) > 0.5 ? 7.0 : -2.0;
  const auto m = pd::train_forest(X, y, small(3), pd::ForestTask::Regression);
  const std::vector<double> lo = {0.5, 0.1, 0.5}, hi = {0.5, 0.9, 0.5};
  EXPECT_NEAR(m.predict_value(lo), -2.0, 1e-12);
  EXPECT_NEAR(m.predict_value(hi), 7.0, 1e-12);
}

TEST(Forest, SameSeedIsBitIdenticalDifferentSeedIsNot) {
  pdtest::Rng rng(2);
  auto X = uniform_matrix(rng, 300, 5);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) y[i] = X.at(i, 0) + X.at(i, 2) * X.at(i, 3) + 0.1 * rng.normal();
  const auto a = pd::train_forest(X, y, small(9), pd::ForestTask::Regression);
  const auto b = pd::train_forest(X, y, small(9), pd::ForestTask::Regression);
  const auto c = pd::train_forest(X, y, small(10), pd::ForestTask::Regression);
  bool any_diff = false;
  for (std::size_t i = 0; i < X.rows; ++i) {
    EXPECT_EQ(a.predict_value(X.row(i)), b.predict_value(X.row(i)));
    any_diff = any_diff || a.predict_value(X.row(i)) != c.predict_value(X.row(i));
  }
  EXPECT_TRUE(any_diff);
  EXPECT_EQ(a.oob_importance(), b.oob_importance());
}

TEST(Forest, ClassificationProbabilitiesSumToOne) {
  pdtest::Rng rng(3);
  auto X = uniform_matrix(rng, 300, 4);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) y[i] = X.at(i, 0) < 0.33 ? 0 : (X.at(i, 0) < 0.66 ? 1 : 2);
  const auto m = pd::train_forest(X, y, small(4), pd::ForestTask::Classification);
  EXPECT_EQ(m.n_classes(), 3);
  int correct = 0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto p = m.predict(X.row(i));
    ASSERT_EQ(p.size(), 3u);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    correct += (std::max_element(p.begin(), p.end()) - p.begin()) == static_cast<long>(y[i]);
  }
  EXPECT_GT(correct, 290);
  EXPECT_GT(m.oob_importance()[0], 0.5);
}

TEST(Forest, ImportanceSumsToOneAndFindsSignal) {
  pdtest::Rng rng(4);
  auto X = uniform_matrix(rng, 1000, 6);
  std::vector<double> y(1000);
  for (int i = 0; i < 1000; ++i) y[i] = 5.0 * X.at(i, 4);
  const auto m = pd::train_forest(X, y, small(5), pd::ForestTask::Regression);
  const auto& imp = m.oob_importance();
  double s = 0.0;
  for (double v : imp) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 4);
  EXPECT_GT(m.oob_error_increase()[4], 1.0);
}

TEST(Forest, NoiseTargetGivesIndistinguishableImportances) {
  // Null distribution: importance ratios stay bounded across seeds.
  for (int s = 0; s < 10; ++s) {
    pdtest::Rng rng(100 + s);
    auto X = uniform_matrix(rng, 800, 5);
    std::vector<double> y(800);
    for (auto& v : y) v = rng.normal();
    auto p = small(s);
    p.n_random_features_per_node = 2;
    const auto m = pd::train_forest(X, y, p, pd::ForestTask::Regression);
    const auto& imp = m.oob_importance();
    const auto [lo, hi] = std::minmax_element(imp.begin(), imp.end());
    EXPECT_LT(*hi / *lo, 3.0) << "seed " << s;
  }
}

TEST(Forest, BlockImportanceAveragesPerColumn) {
  pdtest::Rng rng(5);
  auto X = uniform_matrix(rng, 500, 4);
  std::vector<double> y(500);
  for (int i = 0; i < 500; ++i) y[i] = X.at(i, 3);
  const auto m = pd::train_forest(X, y, small(6), pd::ForestTask::Regression);
  const std::vector<int> blocks = {3, 1};
  const auto b = m.block_importance(blocks);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0] + b[1], 1.0, 1e-12);
  EXPECT_GT(b[1], b[0]);
  const std::vector<int> wrong = {2, 1};
  EXPECT_THROW(m.block_importance(wrong), pd::Error);
}

TEST(Forest, LeafSizeAndDepthLimitsHold) {
  pdtest::Rng rng(6);
  auto X = uniform_matrix(rng, 200, 3);
  std::vector<double> y(200);
  for (auto& v : y) v = rng.normal();
  auto p = small(7);
  p.max_depth = 3;
  const auto m = pd::train_forest(X, y, p, pd::ForestTask::Regression);
  for (const auto& t : m.trees()) EXPECT_LE(t.depth(), 3);
}

TEST(Forest, SaveLoadRoundTripIsExact) {
  pdtest::Rng rng(7);
  auto X = uniform_matrix(rng, 200, 4);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) y[i] = std::sin(6 * X.at(i, 0)) + X.at(i, 1);
  auto m = pd::train_forest(X, y, small(8), pd::ForestTask::Regression);
  m.feature_names = {"a", "b", "c", "d"};
  std::stringstream ss;
  m.save(ss);
  const auto r = pd::ForestModel::load(ss);
  EXPECT_EQ(r.feature_names, m.feature_names);
  EXPECT_EQ(r.schema_hash(), m.schema_hash());
  for (std::size_t i = 0; i < X.rows; ++i) EXPECT_EQ(r.predict_value(X.row(i)), m.predict_value(X.row(i)));
}

TEST(Forest, LoadRejectsCorruptInput) {
  std::stringstream bad("PDFOR1garbage");
  EXPECT_THROW(pd::ForestModel::load(bad), pd::Error);
  std::stringstream empty;
  EXPECT_THROW(pd::ForestModel::load(empty), pd::Error);
}

TEST(Forest, UntrainedModelRefusesToPredict) {
  pd::ForestModel m;
  const std::vector<double> x = {1.0};
  try {
    m.predict(x);
    FAIL();
  } catch (const pd::Error& e) {
    EXPECT_EQ(e.kind(), pd::ErrorKind::UntrainedModel);
  }
  EXPECT_THROW(pd::oob_importance(m), pd::Error);
}

TEST(Forest, InputValidation) {
  pdtest::Rng rng(8);
  auto X = uniform_matrix(rng, 20, 3);
  std::vector<double> y(20, 1.0);
  auto p = small(1);
  p.n_random_features_per_node = 4;
  EXPECT_THROW(pd::train_forest(X, y, p, pd::ForestTask::Regression), pd::Error);
  std::vector<double> short_y(19, 1.0);
  EXPECT_THROW(pd::train_forest(X, short_y, small(1), pd::ForestTask::Regression), pd::Error);
  X.at(3, 1) = std::nan("");
  EXPECT_THROW(pd::train_forest(X, y, small(1), pd::ForestTask::Regression), pd::Error);
  auto X2 = uniform_matrix(rng, 20, 3);
  std::vector<double> labels(20, 0.5);
  EXPECT_THROW(pd::train_forest(X2, labels, small(1), pd::ForestTask::Classification), pd::Error);
  const auto m = pd::train_forest(X2, y, small(1), pd::ForestTask::Regression);
  const std::vector<double> wrong_width = {1.0, 2.0};
  EXPECT_THROW(m.predict(wrong_width), pd::Error);
}

TEST(Forest, SchemaHashIsFnv1a) {
  // FNV-1a 64 of "" is the offset basis.
  EXPECT_EQ(pd::feature_schema_hash({}), "cbf29ce484222325");
  // "a": (basis ^ 0x61) * prime.
  EXPECT_EQ(pd::feature_schema_hash({"a"}), "af63dc4c8601ec8c");
  EXPECT_NE(pd::feature_schema_hash({"a", "b"}), pd::feature_schema_hash({"ab"}));
}

TEST(Forest, MakeForestFromHandBuiltTree) {
  // x0 <= 0.5 -> 1, else 3.
  std::vector<pd::TreeNode> nodes = {{0, 0.5, 1, 2}, {}, {}};
  std::vector<double> values = {0.0, 1.0, 3.0};
  pd::DecisionTree tree(nodes, values, 1);
  const auto m = pd::make_forest({tree, tree}, pd::ForestTask::Regression, 1, 0);
  EXPECT_EQ(m.predict_value(std::vector<double>{0.2}), 1.0);
  EXPECT_EQ(m.predict_value(std::vector<double>{0.5}), 1.0);
  EXPECT_EQ(m.predict_value(std::vector<double>{0.7}), 3.0);
  std::vector<pd::TreeNode> cyclic = {{0, 0.5, 0, 0}};
  EXPECT_THROW(pd::DecisionTree(cyclic, {0.0}, 1), pd::Error);
}
