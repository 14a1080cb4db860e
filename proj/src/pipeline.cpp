#include "planedepth/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <random>

#include "planedepth/flow.hpp"
#include "planedepth/geometric_context.hpp"
#include "planedepth/segmentation.hpp"

namespace planedepth {
namespace {

using VideoRefs = std::vector<const PreparedVideo*>;

VideoRefs refs(std::span<const PreparedVideo> videos) {
  VideoRefs out;
  for (const auto& v : videos) out.push_back(&v);
  return out;
}

std::vector<int> iota_columns(int begin, int end) {
  std::vector<int> c(end - begin);
  std::iota(c.begin(), c.end(), begin);
  return c;
}

double horizon_for(const PreparedVideo& v, const PipelineConfig& cfg) {
  return cfg.horizon_row ? *cfg.horizon_row : v.sample.K.v0;
}

void require_gt(const PreparedVideo& v) {
  if (static_cast<int>(v.sample.gt_depth.size()) != v.labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "video '" + v.sample.name + "' has no ground-truth depth per frame");
  }
}

std::vector<double> select(std::span<const double> values, const std::vector<int>& columns) {
  std::vector<double> out(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) out[k] = values[static_cast<std::size_t>(columns[k])];
  return out;
}

std::vector<std::string> names_for(const std::vector<std::string>& schema, const std::vector<int>& columns) {
  std::vector<std::string> out;
  for (int c : columns) out.push_back(schema[static_cast<std::size_t>(c)]);
  return out;
}

TrainingSet depth_set(const VideoRefs& videos, Ablation a) {
  const auto columns = feature_columns(a);
  TrainingSet s;
  s.X = FeatureMatrix(0, columns.size());
  for (const PreparedVideo* v : videos) {
    require_gt(*v);
    for (const auto& row : v->features) {
      const DepthMap& gt = v->sample.gt_depth[row.frame];
      double sum = 0.0;
      std::int64_t n = 0;
      for (std::int32_t p : v->regions.regions[row.region].pixels[row.frame])
        if (gt.valid[p]) {
          sum += gt.values[p];
          ++n;
        }
      if (n == 0) continue;
      s.X.push_row(select(row.features.values, columns));
      s.y.push_back(std::log10(sum / static_cast<double>(n)));
    }
  }
  return s;
}

TrainingSet occlusion_set(const VideoRefs& videos, Ablation a, double gap) {
  const auto columns = edgelet_columns(a);
  TrainingSet s;
  s.X = FeatureMatrix(0, columns.size());
  for (const PreparedVideo* v : videos) {
    require_gt(*v);
    for (const auto& e : v->edgelets.edgelets) {
      const auto label = occlusion_label(e, v->labels, v->sample.gt_depth[e.frame], gap);
      if (!label) continue;
      s.X.push_row(select(e.features, columns));
      s.y.push_back(*label);
    }
  }
  return s;
}

TrainingSet gc_set(const VideoRefs& videos, const PipelineConfig& cfg) {
  TrainingSet s;
  s.X = FeatureMatrix(0, kGcDescriptorSize);
  for (const PreparedVideo* v : videos) {
    if (static_cast<int>(v->sample.gc.size()) != v->labels.frames) {
      throw Error(ErrorKind::InconsistentInput,
                  "video '" + v->sample.name + "' has no provided geometric context maps to learn from");
    }
    for (const auto& row : gc_descriptors(v->sample.video, v->regions, horizon_for(*v, cfg))) {
      const auto mean = geometric_features(v->sample.gc[row.frame], v->regions.regions[row.region].pixels[row.frame],
                                           v->labels.width, v->labels.height);
      s.X.push_row(row.values);
      s.y.push_back(static_cast<double>(std::max_element(mean.begin(), mean.end()) - mean.begin()));
    }
  }
  return s;
}

// Narrow ablations can have fewer columns than the configured per-node
// sample; cap it so every ablation trains with the same config.
ForestParams fit_params(ForestParams p, std::size_t columns) {
  p.n_random_features_per_node = std::min<int>(p.n_random_features_per_node, static_cast<int>(columns));
  return p;
}

ForestModel depth_model(const VideoRefs& videos, const PipelineConfig& cfg, Ablation a) {
  const TrainingSet s = depth_set(videos, a);
  ForestModel m = train_forest(s.X, s.y, fit_params(cfg.depth_forest, s.X.cols), ForestTask::Regression);
  m.feature_names = names_for(feature_names(), feature_columns(a));
  return m;
}

ForestModel occlusion_model(const VideoRefs& videos, const PipelineConfig& cfg, Ablation a) {
  const TrainingSet s = occlusion_set(videos, a, cfg.occlusion.gap);
  ForestModel m = train_forest(s.X, s.y, fit_params(cfg.occlusion_forest, s.X.cols), ForestTask::Classification, 2);
  m.feature_names = names_for(edgelet_feature_names(), edgelet_columns(a));
  return m;
}


}  // namespace

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::All: return "ALL";
    case Ablation::AppFlow: return "App+Flow";
    case Ablation::Appearance: return "Appearance";
  }
  return "?";
}

Ablation ablation_from_string(const std::string& s) {
  std::string l;
  for (char c : s) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l == "all") return Ablation::All;
  if (l == "app+flow" || l == "appflow" || l == "appearance+flow") return Ablation::AppFlow;
  if (l == "appearance" || l == "app") return Ablation::Appearance;
  throw Error(ErrorKind::InvalidArgument, "ablation must be ALL, App+Flow or Appearance, got '" + s + "'");
}

std::vector<int> feature_columns(Ablation a) {
  switch (a) {
    case Ablation::Appearance: return iota_columns(0, layout::kMotionOffset);
    case Ablation::AppFlow: return iota_columns(0, layout::kGeomOffset);
    case Ablation::All: break;
  }
  return iota_columns(0, layout::kTotal);
}

std::vector<int> edgelet_columns(Ablation a) {
  namespace el = edgelet_layout;
  std::vector<int> c = iota_columns(el::kColorOffset, el::kGeomOffset);
  if (a == Ablation::Appearance) return c;
  for (int k = el::kMotionOffset; k < el::kTotal; ++k) c.push_back(k);
  if (a == Ablation::AppFlow) return c;
  return iota_columns(0, el::kTotal);
}

std::vector<std::string> edgelet_feature_names() {
  return {"color_diff.r",      "color_diff.g",       "color_diff.b",     "color_diff.h",
          "color_diff.s",      "color_diff.v",       "geom_diff.sky",    "geom_diff.ground",
          "geom_diff.solid",   "geom_diff.porous",   "geom_diff.movable", "motion_l2.offset1",
          "motion_l2.offset3", "motion_l2.offset5",  "flow.cross_diff",  "flow.warp_error"};
}

std::vector<int> feature_block_sizes() {
  return {layout::kColor, layout::kTexture, layout::kLocation, layout::kMotion, layout::kGeom};
}

std::vector<int> model_columns(const ForestModel& model, const std::vector<std::string>& schema) {
  if (model.feature_names.empty()) {
    if (model.n_features() != schema.size()) {
      throw Error(ErrorKind::InconsistentInput, "model has no feature names and does not span the full schema");
    }
    return iota_columns(0, static_cast<int>(schema.size()));
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < schema.size(); ++i) index[schema[i]] = static_cast<int>(i);
  std::vector<int> out;
  for (const auto& n : model.feature_names) {
    const auto it = index.find(n);
    if (it == index.end()) throw Error(ErrorKind::InconsistentInput, "model feature '" + n + "' is not in the schema");
    out.push_back(it->second);
  }
  if (out.size() != model.n_features()) {
    throw Error(ErrorKind::InconsistentInput, "model feature names do not match its input width");
  }
  return out;
}

PreparedVideo prepare_video(VideoSample sample, const PipelineConfig& cfg, const ForestModel* gc_model) {
  sample.video.validate();
  sample.K.validate();
  const int W = sample.video.width(), H = sample.video.height(), T = sample.video.frame_count();
  if (!sample.gt_depth.empty()) {
    if (static_cast<int>(sample.gt_depth.size()) != T) {
      throw Error(ErrorKind::InconsistentInput, "ground truth must cover every frame");
    }
    for (const auto& d : sample.gt_depth) require_same_size(d.width, d.height, W, H, "ground-truth depth");
  }
  PreparedVideo v;
  if (sample.labels) {
    require_same_size(sample.labels->width, sample.labels->height, W, H, "label map");
    if (sample.labels->frames != T) throw Error(ErrorKind::InconsistentInput, "label map frame count differs from video");
    validate_labels(*sample.labels);
    v.labels = *sample.labels;
  } else {
    const auto forward = forward_flows(sample.video, cfg.flow);
    v.labels = segment_video(sample.video, forward, cfg.segmentation);
  }
  v.regions = region_index(v.labels);
  v.backward = backward_flows(sample.video, cfg.flow);
  v.sample = std::move(sample);

  std::vector<GeometricContextMap> maps;
  switch (cfg.gc_source) {
    case GcSource::Provided:
      if (v.sample.gc.empty()) {
        throw Error(ErrorKind::InconsistentInput, "video '" + v.sample.name +
                                                      "' has no provided geometric context maps; use gc_source "
                                                      "uniform or baseline");
      }
      maps = FixedGeometricContext(v.sample.gc).maps(v.sample.video, v.labels, v.regions);
      break;
    case GcSource::Uniform:
      maps = UniformGeometricContext().maps(v.sample.video, v.labels, v.regions);
      break;
    case GcSource::Baseline:
      if (gc_model == nullptr) throw Error(ErrorKind::UntrainedModel, "gc_source baseline needs a trained gc model");
      maps = baseline_geometric_context(v.sample.video, v.labels, v.regions, *gc_model, horizon_for(v, cfg));
      break;
  }
  v.gc = std::move(maps);
  v.features =
      extract_video_features(v.sample.video, v.labels, v.regions, v.backward, v.gc, horizon_for(v, cfg));
  v.edgelets = build_edgelet_graph(v.labels);
  compute_edgelet_features(v.edgelets, v.sample.video, v.labels, v.features, v.backward);
  return v;
}

void apply_geometric_context(PreparedVideo& v, std::vector<GeometricContextMap> maps) {
  if (static_cast<int>(maps.size()) != v.labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "apply_geometric_context: one map per frame required");
  }
  std::map<std::pair<int, int>, const FeatureRow*> index;
  for (auto& row : v.features) {
    const auto g = geometric_features(maps[row.frame], v.regions.regions[row.region].pixels[row.frame],
                                      v.labels.width, v.labels.height);
    std::copy(g.begin(), g.end(), row.features.values.begin() + layout::kGeomOffset);
    index[{row.frame, row.region}] = &row;
  }
  for (auto& e : v.edgelets.edgelets) {
    const auto gi = index.at({e.frame, e.i})->features.block(FeatureBlock::Geom);
    const auto gj = index.at({e.frame, e.j})->features.block(FeatureBlock::Geom);
    for (int k = 0; k < layout::kGeom; ++k) e.features[edgelet_layout::kGeomOffset + k] = std::abs(gi[k] - gj[k]);
  }
  v.gc = std::move(maps);
}

TrainingSet depth_training_set(std::span<const PreparedVideo> videos, Ablation a) { return depth_set(refs(videos), a); }

TrainingSet occlusion_training_set(std::span<const PreparedVideo> videos, Ablation a, double gap) {
  return occlusion_set(refs(videos), a, gap);
}

TrainingSet gc_training_set(std::span<const PreparedVideo> videos, const PipelineConfig& cfg) {
  return gc_set(refs(videos), cfg);
}

ForestModel train_depth_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg, Ablation a) {
  return depth_model(refs(videos), cfg, a);
}

ForestModel train_occlusion_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg, Ablation a) {
  return occlusion_model(refs(videos), cfg, a);
}

ForestModel train_gc_model(std::span<const PreparedVideo> videos, const PipelineConfig& cfg) {
  const TrainingSet s = gc_set(refs(videos), cfg);
  return train_geometric_context(s.X, s.y, cfg.gc_forest);
}

std::vector<DepthMap> predict_unary_depth(const PreparedVideo& v, const ForestModel& model) {
  if (!model.trained()) throw Error(ErrorKind::UntrainedModel, "depth model is not trained");
  const auto columns = model_columns(model, feature_names());
  std::vector<DepthMap> out(v.labels.frames, DepthMap(v.labels.width, v.labels.height));
  for (const auto& row : v.features) {
    const double logd = model.predict_value(select(row.features.values, columns));
    const float d = static_cast<float>(std::clamp(std::pow(10.0, logd), 0.1, kMaxDepth));
    DepthMap& m = out[row.frame];
    for (std::int32_t p : v.regions.regions[row.region].pixels[row.frame]) {
      m.values[p] = d;
      m.valid[p] = 1;
    }
  }
  return out;
}

void estimate_gates(EdgeletGraph& graph, const ForestModel& model, const PipelineConfig& cfg) {
  const auto columns = model_columns(model, edgelet_feature_names());
  classify_edgelets(graph, model, columns);
  smooth_pairwise(graph, cfg.occlusion.pairwise_iterations);
  temporal_smooth(graph, cfg.occlusion.window);
}

void oracle_gates(EdgeletGraph& graph, const SegmentationLabelMap& labels, std::span<const DepthMap> depth,
                  double gap) {
  if (static_cast<int>(depth.size()) != labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "oracle_gates: one depth map per frame required");
  }
  for (auto& e : graph.edgelets) {
    const auto label = occlusion_label(e, labels, depth[e.frame], gap);
    e.unary = e.p_non_occl = (label && *label == 1) ? 1.0 : 0.0;
  }
}

InferenceResult infer_depth(const SegmentationLabelMap& labels, std::span<const DepthMap> unary,
                            const EdgeletGraph& gated, const CameraIntrinsics& K, const PipelineConfig& cfg) {
  if (static_cast<int>(unary.size()) != labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "infer_depth: one unary map per frame required");
  }
  const int R = labels.region_count();
  InferenceResult out;
  out.planes.assign(labels.frames, std::vector<std::optional<PlaneParams>>(R));
  std::vector<std::vector<const Edgelet*>> by_frame(labels.frames);
  for (const auto& e : gated.edgelets) {
    if (e.frame < 0 || e.frame >= labels.frames) throw Error(ErrorKind::InconsistentInput, "edgelet frame out of range");
    by_frame[e.frame].push_back(&e);
  }
  for (int t = 0; t < labels.frames; ++t) {
    std::vector<Edgelet> edgelets;
    for (const Edgelet* e : by_frame[t]) edgelets.push_back(*e);
    const MrfProblem problem = build_mrf_problem(labels, t, unary[t], edgelets, K, cfg.mrf, cfg.sampling);
    FrameStats stats;
    if (!problem.regions.empty()) {
      const MrfSolution s = solve_mrf(problem, cfg.solver);
      for (std::size_t i = 0; i < problem.regions.size(); ++i) out.planes[t][problem.regions[i].id] = s.planes[i];
      stats = {static_cast<int>(problem.regions.size()), static_cast<int>(problem.pairs.size()), s.energy,
               s.iterations, s.converged};
    }
    for (std::int32_t id : labels.frame(t))
      if (!out.planes[t][id]) out.planes[t][id] = PlaneParams{Vec3(0.0, 0.0, 1.0 / kMaxDepth)};
    out.frames.push_back(stats);
  }
  out.smoothed = smooth_plane_table(out.planes, cfg.depth_window);
  for (int t = 0; t < labels.frames; ++t)
    out.depth.push_back(render_depth(labels.frame(t), labels.width, labels.height, out.smoothed[t], K));
  return out;
}

std::vector<std::vector<int>> make_folds(int n_videos, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "crossval needs at least 2 folds");
  if (n_videos < k) {
    throw Error(ErrorKind::InvalidArgument, "crossval: " + std::to_string(n_videos) + " videos cannot fill " +
                                                std::to_string(k) + " folds");
  }
  std::vector<int> order(n_videos);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> folds(k);
  for (int i = 0; i < n_videos; ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CrossvalResult crossval(std::span<const PreparedVideo> videos, int k, const PipelineConfig& cfg, Ablation a,
                        std::uint64_t seed) {
  CrossvalResult result;
  result.ablation = a;
  result.test_videos = make_folds(static_cast<int>(videos.size()), k, seed);
  // Folds run concurrently; results are collected in fold order.
  const auto run_fold = [&](const std::vector<int>& test) {
    std::vector<PreparedVideo> relabeled;
    VideoRefs train, held;
    if (cfg.gc_source == GcSource::Baseline) {
      relabeled.assign(videos.begin(), videos.end());
      VideoRefs gc_train;
      for (int i = 0; i < static_cast<int>(videos.size()); ++i)
        if (!std::binary_search(test.begin(), test.end(), i)) gc_train.push_back(&videos[i]);
      const TrainingSet gs = gc_set(gc_train, cfg);
      const ForestModel gc = train_geometric_context(gs.X, gs.y, cfg.gc_forest);
      for (auto& v : relabeled)
        apply_geometric_context(v, baseline_geometric_context(v.sample.video, v.labels, v.regions, gc,
                                                              horizon_for(v, cfg)));
    }
    for (int i = 0; i < static_cast<int>(videos.size()); ++i) {
      const PreparedVideo* v = relabeled.empty() ? &videos[i] : &relabeled[i];
      (std::binary_search(test.begin(), test.end(), i) ? held : train).push_back(v);
    }
    const ForestModel dm = depth_model(train, cfg, a);
    const ForestModel om = occlusion_model(train, cfg, a);
    std::vector<DepthMap> pred, unary_pred, gt;
    std::vector<GeometricContextMap> classes;
    for (const PreparedVideo* v : held) {
      require_gt(*v);
      const auto unary = predict_unary_depth(*v, dm);
      EdgeletGraph graph = v->edgelets;
      estimate_gates(graph, om, cfg);
      const auto inferred = infer_depth(v->labels, unary, graph, v->sample.K, cfg);
      pred.insert(pred.end(), inferred.depth.begin(), inferred.depth.end());
      unary_pred.insert(unary_pred.end(), unary.begin(), unary.end());
      gt.insert(gt.end(), v->sample.gt_depth.begin(), v->sample.gt_depth.end());
      classes.insert(classes.end(), v->gc.begin(), v->gc.end());
    }
    return std::pair{evaluate(pred, gt, classes, cfg.log_base), evaluate(unary_pred, gt, classes, cfg.log_base)};
  };
  std::vector<std::future<std::pair<EvalReport, EvalReport>>> pending;
  for (const auto& test : result.test_videos) pending.push_back(std::async(std::launch::async, run_fold, std::cref(test)));
  for (auto& p : pending) {
    auto [mrf, unary] = p.get();
    result.folds.push_back(std::move(mrf));
    result.unary_folds.push_back(std::move(unary));
  }
  result.aggregate = merge_reports(result.folds);
  result.unary_aggregate = merge_reports(result.unary_folds);
  return result;
}

nlohmann::json to_json(const CrossvalResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    folds.push_back({{"test_videos", r.test_videos[f]},
                     {"mrf", to_json(r.folds[f])},
                     {"unary", to_json(r.unary_folds[f])}});
  }
  return {{"ablation", to_string(r.ablation)},
          {"folds", folds},
          {"aggregate", to_json(r.aggregate)},
          {"unary_aggregate", to_json(r.unary_aggregate)}};
}

}  // namespace planedepth
