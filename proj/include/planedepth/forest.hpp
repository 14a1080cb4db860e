#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "planedepth/error.hpp"

namespace planedepth {

/// Row-major dense matrix of feature rows.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }

  void push_row(std::span<const double> values);
  FeatureMatrix select_columns(std::span<const int> columns) const;
};

enum class ForestTask { Regression, Classification };

struct ForestParams {
  int n_trees = 105;
  int n_random_features_per_node = 11;
  int max_depth = 35;
  int min_samples_leaf = 5;
  std::uint64_t rng_seed = 0;
  bool bootstrap = true;

  /// Throws InvalidArgument unless every field fits a feature dimension of dim.
  void validate(std::size_t dim) const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
};

/// One binary tree; leaf payloads live in a flat array of value_width
/// entries per node (zeros on internal nodes).
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::vector<double> values, int value_width);

  std::span<const double> leaf_for(std::span<const double> x) const;
  int depth() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  int value_width() const { return value_width_; }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> values_;
  int value_width_ = 1;
};

class ForestModel {
 public:
  ForestModel() = default;

  bool trained() const { return !trees_.empty(); }
  ForestTask task() const { return task_; }
  std::size_t n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }
  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// Regression: one value (mean of tree outputs). Classification: class
  /// probabilities averaged over trees, summing to 1.
  std::vector<double> predict(std::span<const double> x) const;
  double predict_value(std::span<const double> x) const;

  bool has_oob_importance() const { return !importance_.empty(); }
  /// Per-feature permutation importance normalized to sum 1.
  const std::vector<double>& oob_importance() const;
  /// Mean OOB error increase per prediction when each feature is permuted.
  const std::vector<double>& oob_error_increase() const;
  /// Importance summed within consecutive blocks and divided by block
  /// width, then renormalized to sum 1.
  std::vector<double> block_importance(std::span<const int> block_sizes) const;
  double oob_error() const { return oob_error_; }

  std::vector<std::string> feature_names;
  std::string schema_hash() const;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static ForestModel load(std::istream& in);
  static ForestModel load(const std::string& path);

 private:
  friend ForestModel train_forest(const FeatureMatrix&, std::span<const double>, const ForestParams&,
                                  ForestTask, int);
  friend ForestModel make_forest(std::vector<DecisionTree>, ForestTask, std::size_t, int);

  void require_trained() const;

  ForestTask task_ = ForestTask::Regression;
  std::size_t n_features_ = 0;
  int n_classes_ = 0;
  ForestParams params_;
  std::vector<DecisionTree> trees_;
  std::vector<double> importance_;
  std::vector<double> error_increase_;
  double oob_error_ = 0.0;
};

/// Regression: y holds targets. Classification: y holds class indices
/// 0..n_classes-1 (n_classes <= 0 infers max + 1).
ForestModel train_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params,
                         ForestTask task, int n_classes = 0);

/// Assembles a model from prebuilt trees (no OOB data).
ForestModel make_forest(std::vector<DecisionTree> trees, ForestTask task, std::size_t n_features,
                        int n_classes);

/// Throws UntrainedModel when the model carries no OOB importance.
const std::vector<double>& oob_importance(const ForestModel& model);

/// 64-bit FNV-1a over the newline-joined column names, as 16 hex digits.
std::string feature_schema_hash(const std::vector<std::string>& names);

}  // namespace planedepth
