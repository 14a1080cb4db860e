#include "planedepth/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "planedepth/binary_io.hpp"

namespace planedepth {
namespace {

constexpr const char* kMagic = "PDFOR1";
constexpr std::uint32_t kFormatVersion = 1;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tree, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

/// Runs job(i) for i in [0, n) on a small pool; each job owns its output slot.
template <class Job>
void parallel_for(int n, Job job) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params, ForestTask task,
              int n_classes, std::mt19937_64& rng)
      : X_(X), y_(y), params_(params), task_(task), n_classes_(n_classes), rng_(rng),
        width_(task == ForestTask::Regression ? 1 : n_classes) {
    feature_pool_.resize(X.cols);
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
  }

  DecisionTree build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return DecisionTree(std::move(nodes_), std::move(values_), width_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int new_node() {
    nodes_.emplace_back();
    values_.resize(values_.size() + width_, 0.0);
    return static_cast<int>(nodes_.size()) - 1;
  }

  void make_leaf(int node, std::size_t begin, std::size_t end) {
    double* v = values_.data() + static_cast<std::size_t>(node) * width_;
    const double n = static_cast<double>(end - begin);
    if (task_ == ForestTask::Regression) {
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i) s += y_[rows_[i]];
      v[0] = s / n;
    } else {
      for (std::size_t i = begin; i < end; ++i) v[static_cast<int>(y_[rows_[i]])] += 1.0;
      for (int c = 0; c < width_; ++c) v[c] /= n;
    }
  }

  bool pure(std::size_t begin, std::size_t end) const {
    const double first = y_[rows_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i)
      if (y_[rows_[i]] != first) return false;
    return true;
  }

  std::vector<int> sample_features() {
    const int dim = static_cast<int>(X_.cols);
    const int m = std::min(params_.n_random_features_per_node, dim);
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, dim - 1);
      std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
    }
    std::vector<int> chosen(feature_pool_.begin(), feature_pool_.begin() + m);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  Split best_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    Split best;
    std::vector<std::pair<double, std::uint32_t>> order(n);
    std::vector<double> left(width_), total(width_, 0.0);
    double parent = 0.0;
    if (task_ == ForestTask::Regression) {
      for (std::size_t i = begin; i < end; ++i) total[0] += y_[rows_[i]];
      parent = total[0] * total[0] / static_cast<double>(n);
    } else {
      for (std::size_t i = begin; i < end; ++i) total[static_cast<int>(y_[rows_[i]])] += 1.0;
      for (double c : total) parent += c * c / static_cast<double>(n);
    }
    const double tolerance = 1e-12 * (std::abs(parent) + 1.0);

    for (int f : sample_features()) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {X_.at(rows_[begin + i], f), rows_[begin + i]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t i = 1; i < n; ++i) {
        const double yi = y_[order[i - 1].second];
        if (task_ == ForestTask::Regression) left[0] += yi;
        else left[static_cast<int>(yi)] += 1.0;
        if (i < min_leaf || n - i < min_leaf) continue;
        const double lo = order[i - 1].first, hi = order[i].first;
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
        double score = -parent;
        for (int c = 0; c < width_; ++c) {
          const double r = total[c] - left[c];
          score += left[c] * left[c] / nl + r * r / nr;
        }
        if (score > best.gain + tolerance || (best.feature < 0 && score > tolerance)) {
          double threshold = 0.5 * (lo + hi);
          if (!(threshold < hi)) threshold = lo;
          best = {f, threshold, score};
        }
      }
    }
    return best;
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int node = new_node();
    const std::size_t n = end - begin;
    if (depth >= params_.max_depth || n < 2 * static_cast<std::size_t>(params_.min_samples_leaf) ||
        pure(begin, end)) {
      make_leaf(node, begin, end);
      return node;
    }
    const Split split = best_split(begin, end);
    if (split.feature < 0) {
      make_leaf(node, begin, end);
      return node;
    }
    const auto mid = std::partition(rows_.begin() + begin, rows_.begin() + end, [&](std::uint32_t r) {
      return X_.at(r, split.feature) <= split.threshold;
    });
    const std::size_t cut = static_cast<std::size_t>(mid - rows_.begin());
    nodes_[node].feature = split.feature;
    nodes_[node].threshold = split.threshold;
    const int l = grow(begin, cut, depth + 1);
    const int r = grow(cut, end, depth + 1);
    nodes_[node].left = l;
    nodes_[node].right = r;
    return node;
  }

  const FeatureMatrix& X_;
  std::span<const double> y_;
  const ForestParams& params_;
  ForestTask task_;
  int n_classes_;
  std::mt19937_64& rng_;
  int width_;
  std::vector<int> feature_pool_;
  std::vector<std::uint32_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<double> values_;
};

double prediction_error(std::span<const double> leaf, double target, ForestTask task) {
  if (task == ForestTask::Regression) {
    const double d = target - leaf[0];
    return d * d;
  }
  double e = 0.0;
  for (std::size_t c = 0; c < leaf.size(); ++c) {
    const double d = leaf[c] - (static_cast<int>(c) == static_cast<int>(target) ? 1.0 : 0.0);
    e += d * d;
  }
  return e;
}

struct TreeResult {
  DecisionTree tree;
  std::vector<std::uint32_t> oob_rows;
  std::vector<double> oob_predictions;  // value_width per OOB row
  double base_error = 0.0;
  std::vector<double> permuted_error;  // per feature
};

TreeResult train_one(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params,
                     ForestTask task, int n_classes, int index) {
  auto rng = make_rng(params.rng_seed, static_cast<std::uint64_t>(index), 0);
  const std::size_t n = X.rows;
  std::vector<std::uint32_t> rows(n);
  std::vector<std::uint8_t> in_bag(n, 0);
  if (params.bootstrap) {
    std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(n - 1));
    for (auto& r : rows) {
      r = draw(rng);
      in_bag[r] = 1;
    }
  } else {
    std::iota(rows.begin(), rows.end(), 0u);
    std::fill(in_bag.begin(), in_bag.end(), 1);
  }

  TreeResult result;
  TreeBuilder builder(X, y, params, task, n_classes, rng);
  result.tree = builder.build(std::move(rows));
  for (std::uint32_t r = 0; r < n; ++r)
    if (!in_bag[r]) result.oob_rows.push_back(r);
  if (result.oob_rows.empty()) return result;

  const int width = result.tree.value_width();
  for (std::uint32_t r : result.oob_rows) {
    const auto leaf = result.tree.leaf_for(X.row(r));
    result.oob_predictions.insert(result.oob_predictions.end(), leaf.begin(), leaf.end());
    result.base_error += prediction_error(leaf, y[r], task);
  }

  std::vector<std::uint8_t> used(X.cols, 0);
  for (const auto& node : result.tree.nodes())
    if (node.feature >= 0) used[node.feature] = 1;

  auto perm_rng = make_rng(params.rng_seed, static_cast<std::uint64_t>(index), 1);
  result.permuted_error.assign(X.cols, result.base_error);
  std::vector<double> column(result.oob_rows.size());
  std::vector<double> buffer(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    if (!used[f]) continue;
    for (std::size_t i = 0; i < result.oob_rows.size(); ++i) column[i] = X.at(result.oob_rows[i], f);
    std::shuffle(column.begin(), column.end(), perm_rng);
    double err = 0.0;
    for (std::size_t i = 0; i < result.oob_rows.size(); ++i) {
      const auto src = X.row(result.oob_rows[i]);
      std::copy(src.begin(), src.end(), buffer.begin());
      buffer[f] = column[i];
      err += prediction_error(result.tree.leaf_for(buffer), y[result.oob_rows[i]], task);
    }
    result.permuted_error[f] = err;
  }
  (void)width;
  return result;
}

void write_model_json(const ForestModel& m, std::ostream& out, const std::vector<double>& importance,
                      const std::vector<double>& increase, double oob_error) {
  nlohmann::json meta;
  meta["format"] = kMagic;
  meta["version"] = kFormatVersion;
  meta["task"] = m.task() == ForestTask::Regression ? "regression" : "classification";
  meta["n_features"] = m.n_features();
  meta["n_classes"] = m.n_classes();
  const ForestParams& p = m.params();
  meta["params"] = {{"n_trees", p.n_trees},
                    {"n_random_features_per_node", p.n_random_features_per_node},
                    {"max_depth", p.max_depth},
                    {"min_samples_leaf", p.min_samples_leaf},
                    {"rng_seed", p.rng_seed},
                    {"bootstrap", p.bootstrap}};
  meta["feature_names"] = m.feature_names;
  meta["feature_schema_hash"] = m.schema_hash();
  meta["oob_importance"] = importance;
  meta["oob_error_increase"] = increase;
  meta["oob_error"] = oob_error;
  const std::string text = meta.dump();
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

void FeatureMatrix::push_row(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) {
    throw Error(ErrorKind::DimensionMismatch, "FeatureMatrix::push_row: expected " + std::to_string(cols) +
                                                  " columns, got " + std::to_string(values.size()));
  }
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const int> columns) const {
  FeatureMatrix out(rows, columns.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] < 0 || static_cast<std::size_t>(columns[j]) >= cols) {
        throw Error(ErrorKind::InvalidArgument, "select_columns: column out of range");
      }
      out.at(i, j) = at(i, static_cast<std::size_t>(columns[j]));
    }
  return out;
}

void ForestParams::validate(std::size_t dim) const {
  if (n_trees < 1) throw Error(ErrorKind::InvalidArgument, "forest: n_trees must be >= 1");
  if (n_random_features_per_node < 1 || static_cast<std::size_t>(n_random_features_per_node) > dim) {
    throw Error(ErrorKind::InvalidArgument, "forest: n_random_features_per_node must be in [1, " +
                                                std::to_string(dim) + "]");
  }
  if (max_depth < 1) throw Error(ErrorKind::InvalidArgument, "forest: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw Error(ErrorKind::InvalidArgument, "forest: min_samples_leaf must be >= 1");
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::vector<double> values, int value_width)
    : nodes_(std::move(nodes)), values_(std::move(values)), value_width_(value_width) {
  if (nodes_.empty()) throw Error(ErrorKind::Format, "decision tree has no nodes");
  if (value_width_ < 1 || values_.size() != nodes_.size() * static_cast<std::size_t>(value_width_)) {
    throw Error(ErrorKind::Format, "decision tree value table does not match its nodes");
  }
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::int32_t i = 0; i < n; ++i) {
    const TreeNode& node = nodes_[i];
    if (node.feature < 0) continue;
    if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      throw Error(ErrorKind::Format, "decision tree has an internal node with invalid children");
    }
  }
}

std::span<const double> DecisionTree::leaf_for(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes_[i].feature >= 0) {
    const TreeNode& node = nodes_[i];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return {values_.data() + static_cast<std::size_t>(i) * value_width_, static_cast<std::size_t>(value_width_)};
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

void ForestModel::require_trained() const {
  if (!trained()) throw Error(ErrorKind::UntrainedModel, "forest model is not trained");
}

std::vector<double> ForestModel::predict(std::span<const double> x) const {
  require_trained();
  if (x.size() != n_features_) {
    throw Error(ErrorKind::DimensionMismatch, "forest predict: expected " + std::to_string(n_features_) +
                                                  " features, got " + std::to_string(x.size()));
  }
  const int width = trees_.front().value_width();
  std::vector<double> out(width, 0.0);
  for (const auto& tree : trees_) {
    const auto leaf = tree.leaf_for(x);
    for (int c = 0; c < width; ++c) out[c] += leaf[c];
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  return out;
}

double ForestModel::predict_value(std::span<const double> x) const {
  if (task_ != ForestTask::Regression) {
    throw Error(ErrorKind::InvalidArgument, "predict_value needs a regression forest");
  }
  return predict(x)[0];
}

const std::vector<double>& ForestModel::oob_importance() const {
  if (importance_.empty()) {
    throw Error(ErrorKind::UntrainedModel, "forest has no out-of-bag importance (trained without bootstrap?)");
  }
  return importance_;
}

const std::vector<double>& ForestModel::oob_error_increase() const {
  oob_importance();
  return error_increase_;
}

std::vector<double> ForestModel::block_importance(std::span<const int> block_sizes) const {
  const auto& imp = oob_importance();
  std::size_t total = 0;
  for (int s : block_sizes) total += static_cast<std::size_t>(s);
  if (total != imp.size()) {
    throw Error(ErrorKind::DimensionMismatch, "block_importance: block sizes do not cover the feature vector");
  }
  std::vector<double> out;
  std::size_t offset = 0;
  double sum = 0.0;
  for (int s : block_sizes) {
    double b = 0.0;
    for (int i = 0; i < s; ++i) b += imp[offset + i];
    offset += static_cast<std::size_t>(s);
    out.push_back(s > 0 ? b / s : 0.0);
    sum += out.back();
  }
  for (double& v : out) v /= sum;
  return out;
}

std::string ForestModel::schema_hash() const { return feature_schema_hash(feature_names); }

void ForestModel::save(std::ostream& out) const {
  require_trained();
  out.write(kMagic, 6);
  binio::write_le<std::uint32_t>(out, kFormatVersion);
  write_model_json(*this, out, importance_, error_increase_, oob_error_);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(trees_.size()));
  for (const auto& tree : trees_) {
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes().size()));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.value_width()));
    for (const auto& node : tree.nodes()) {
      binio::write_le<std::int32_t>(out, node.feature);
      binio::write_le<double>(out, node.threshold);
      binio::write_le<std::int32_t>(out, node.left);
      binio::write_le<std::int32_t>(out, node.right);
    }
    for (double v : tree.values()) binio::write_le<double>(out, v);
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing forest model");
}

void ForestModel::save(const std::string& path) const {
  std::ostringstream buffer;
  save(buffer);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  const std::string bytes = buffer.str();
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(ErrorKind::Io, "failed writing " + path);
}

ForestModel ForestModel::load(std::istream& in) {
  binio::expect_magic(in, kMagic, "forest model");
  const auto version = binio::read_le<std::uint32_t>(in, "forest version");
  if (version != kFormatVersion) {
    throw Error(ErrorKind::Format, "forest model: unsupported version " + std::to_string(version));
  }
  const auto json_size = binio::read_le<std::uint32_t>(in, "forest metadata size");
  std::string text(json_size, '\0');
  if (!in.read(text.data(), json_size)) throw Error(ErrorKind::Format, "forest model: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("forest model: bad metadata: ") + e.what());
  }

  ForestModel m;
  try {
    m.task_ = meta.at("task").get<std::string>() == "regression" ? ForestTask::Regression
                                                                  : ForestTask::Classification;
    m.n_features_ = meta.at("n_features").get<std::size_t>();
    m.n_classes_ = meta.at("n_classes").get<int>();
    const auto& p = meta.at("params");
    m.params_.n_trees = p.at("n_trees").get<int>();
    m.params_.n_random_features_per_node = p.at("n_random_features_per_node").get<int>();
    m.params_.max_depth = p.at("max_depth").get<int>();
    m.params_.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    m.params_.rng_seed = p.at("rng_seed").get<std::uint64_t>();
    m.params_.bootstrap = p.at("bootstrap").get<bool>();
    m.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    m.importance_ = meta.at("oob_importance").get<std::vector<double>>();
    m.error_increase_ = meta.at("oob_error_increase").get<std::vector<double>>();
    m.oob_error_ = meta.at("oob_error").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("forest model: bad metadata: ") + e.what());
  }
  if (!m.feature_names.empty() && meta.value("feature_schema_hash", "") != m.schema_hash()) {
    throw Error(ErrorKind::Format, "forest model: feature schema hash does not match feature names");
  }

  const auto n_trees = binio::read_le<std::uint32_t>(in, "tree count");
  if (n_trees == 0) throw Error(ErrorKind::Format, "forest model: no trees");
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    const auto n_nodes = binio::read_le<std::uint32_t>(in, "node count");
    const auto width = binio::read_le<std::uint32_t>(in, "value width");
    if (n_nodes == 0 || n_nodes > (1u << 26) || width == 0 || width > 1024) {
      throw Error(ErrorKind::Format, "forest model: implausible tree header");
    }
    std::vector<TreeNode> nodes(n_nodes);
    for (auto& node : nodes) {
      node.feature = binio::read_le<std::int32_t>(in, "node feature");
      node.threshold = binio::read_le<double>(in, "node threshold");
      node.left = binio::read_le<std::int32_t>(in, "node left");
      node.right = binio::read_le<std::int32_t>(in, "node right");
      if (node.feature >= static_cast<std::int32_t>(m.n_features_)) {
        throw Error(ErrorKind::Format, "forest model: split feature out of range");
      }
    }
    std::vector<double> values(static_cast<std::size_t>(n_nodes) * width);
    for (double& v : values) v = binio::read_le<double>(in, "leaf value");
    m.trees_.emplace_back(std::move(nodes), std::move(values), static_cast<int>(width));
  }
  return m;
}

ForestModel ForestModel::load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Io, "cannot open forest model " + path);
  return load(file);
}

ForestModel train_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params,
                         ForestTask task, int n_classes) {
  if (X.rows == 0 || X.cols == 0) throw Error(ErrorKind::EmptyInput, "train_forest: empty feature matrix");
  if (X.rows != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "train_forest: " + std::to_string(X.rows) + " rows but " +
                                                  std::to_string(y.size()) + " targets");
  }
  if (X.rows < 2) throw Error(ErrorKind::EmptyInput, "train_forest: need at least 2 samples");
  if (X.rows >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "train_forest: too many rows");
  }
  params.validate(X.cols);
  for (double v : y)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "train_forest: non-finite target");
  for (double v : X.data)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "train_forest: non-finite feature value");
  if (task == ForestTask::Classification) {
    int max_class = 0;
    for (double v : y) {
      if (v < 0.0 || v != std::floor(v)) {
        throw Error(ErrorKind::InvalidArgument, "train_forest: class labels must be non-negative integers");
      }
      max_class = std::max(max_class, static_cast<int>(v));
    }
    if (n_classes <= 0) n_classes = max_class + 1;
    if (max_class >= n_classes) throw Error(ErrorKind::InvalidArgument, "train_forest: class label out of range");
  } else {
    n_classes = 0;
  }

  std::vector<TreeResult> results(params.n_trees);
  parallel_for(params.n_trees,
               [&](int i) { results[i] = train_one(X, y, params, task, n_classes, i); });

  ForestModel m;
  m.task_ = task;
  m.n_features_ = X.cols;
  m.n_classes_ = n_classes;
  m.params_ = params;
  const int width = task == ForestTask::Regression ? 1 : n_classes;

  double base = 0.0;
  std::size_t oob_count = 0;
  std::vector<double> permuted(X.cols, 0.0);
  std::vector<double> sum_pred(X.rows * width, 0.0);
  std::vector<int> votes(X.rows, 0);
  for (auto& r : results) {
    base += r.base_error;
    oob_count += r.oob_rows.size();
    for (std::size_t f = 0; f < r.permuted_error.size(); ++f) permuted[f] += r.permuted_error[f];
    for (std::size_t i = 0; i < r.oob_rows.size(); ++i) {
      const std::uint32_t row = r.oob_rows[i];
      for (int c = 0; c < width; ++c) sum_pred[row * width + c] += r.oob_predictions[i * width + c];
      ++votes[row];
    }
    m.trees_.push_back(std::move(r.tree));
  }

  if (params.bootstrap && oob_count > 0) {
    std::size_t scored = 0;
    double err = 0.0;
    for (std::size_t row = 0; row < X.rows; ++row) {
      if (votes[row] == 0) continue;
      std::vector<double> p(width);
      for (int c = 0; c < width; ++c) p[c] = sum_pred[row * width + c] / votes[row];
      err += prediction_error(p, y[row], task);
      ++scored;
    }
    m.oob_error_ = scored ? err / static_cast<double>(scored) : 0.0;

    // Score = permuted / baseline OOB error; an irrelevant feature scores 1.
    const double floor = std::max(base, std::numeric_limits<double>::min());
    m.importance_.resize(X.cols);
    m.error_increase_.resize(X.cols);
    double total = 0.0;
    for (std::size_t f = 0; f < X.cols; ++f) {
      m.error_increase_[f] = (permuted[f] - base) / static_cast<double>(oob_count);
      m.importance_[f] = base > 0.0 ? permuted[f] / floor : (permuted[f] > 0.0 ? 2.0 : 1.0);
      total += m.importance_[f];
    }
    for (double& v : m.importance_) v /= total;
  }
  return m;
}

ForestModel make_forest(std::vector<DecisionTree> trees, ForestTask task, std::size_t n_features, int n_classes) {
  if (trees.empty()) throw Error(ErrorKind::UntrainedModel, "make_forest: no trees");
  ForestModel m;
  m.task_ = task;
  m.n_features_ = n_features;
  m.n_classes_ = task == ForestTask::Classification ? n_classes : 0;
  m.params_.n_trees = static_cast<int>(trees.size());
  m.params_.bootstrap = false;
  m.trees_ = std::move(trees);
  return m;
}

const std::vector<double>& oob_importance(const ForestModel& model) { return model.oob_importance(); }

std::string feature_schema_hash(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  bool first = true;
  for (const auto& name : names) {
    if (!first) {
      h ^= static_cast<unsigned char>('\n');
      h *= 0x100000001b3ull;
    }
    first = false;
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace planedepth
