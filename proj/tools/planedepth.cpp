#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planedepth/config.hpp"
#include "planedepth/eval.hpp"
#include "planedepth/flow.hpp"
#include "planedepth/formats.hpp"
#include "planedepth/geometric_context.hpp"
#include "planedepth/lidar.hpp"
#include "planedepth/pipeline.hpp"
#include "planedepth/preview.hpp"
#include "planedepth/segmentation.hpp"
#include "planedepth/synthetic.hpp"

namespace pd = planedepth;
namespace fs = std::filesystem;

namespace {

// Layout of a scene directory.
namespace layout {
const char* kFrames = "frames";
const char* kDepth = "depth";
const char* kGc = "gc";
const char* kFlow = "flow";
const char* kPred = "pred";
const char* kLidar = "lidar";
const char* kLabels = "labels.stseg";
const char* kLabelsGt = "labels_gt.stseg";
const char* kFeatures = "features.csv";
const char* kEdgelets = "edgelets.jsonl";
const char* kGates = "gates.jsonl";
const char* kPlanes = "planes.csv";
const char* kPlanesGt = "planes_gt.csv";
const char* kCamera = "camera.json";
const char* kScene = "scene.json";
const char* kExtrinsics = "extrinsics.json";
const char* kOcclusionGt = "occlusion_gt.csv";
}  // namespace layout

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string ablation = "ALL";
  int folds = 5;
  std::optional<int> window;
  std::optional<double> lambda_conn;
  std::optional<double> lambda_cop;
};

pd::PipelineConfig make_config(const Globals& g) {
  pd::PipelineConfig cfg = g.config.empty() ? pd::PipelineConfig{} : pd::load_config(g.config);
  if (g.seed) cfg.apply_seed(*g.seed);
  if (g.window) cfg.depth_window = *g.window;
  if (g.lambda_conn) cfg.mrf.lambda_conn = *g.lambda_conn;
  if (g.lambda_cop) cfg.mrf.lambda_cop = *g.lambda_cop;
  cfg.validate();
  return cfg;
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw pd::Error(pd::ErrorKind::Io, "not a directory: " + dir.string());
}

// Reads every numbered file stem_%06d.ext in dir, starting at 0.
template <class Reader>
auto read_sequence(const fs::path& dir, const std::string& stem, const std::string& ext, int expected,
                   Reader reader) {
  std::vector<decltype(reader(fs::path{}))> out;
  for (int t = 0;; ++t) {
    const fs::path p = dir / pd::indexed_name(stem, t, ext);
    if (!fs::exists(p)) break;
    out.push_back(reader(p));
  }
  if (expected >= 0 && static_cast<int>(out.size()) != expected) {
    throw pd::Error(pd::ErrorKind::InconsistentInput, dir.string() + " holds " + std::to_string(out.size()) + " " +
                                                          stem + " files, expected " + std::to_string(expected));
  }
  return out;
}

std::vector<pd::DepthMap> read_depth_dir(const fs::path& dir, int expected = -1) {
  require_dir(dir);
  auto maps = read_sequence(dir, "depth", "pfm", expected, [](const fs::path& p) { return pd::read_pfm(p); });
  if (maps.empty()) throw pd::Error(pd::ErrorKind::EmptyInput, "no depth_%06d.pfm files in " + dir.string());
  return maps;
}

void write_depth_dir(const fs::path& dir, const std::vector<pd::DepthMap>& maps, bool png16) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < maps.size(); ++t) {
    pd::write_pfm(dir / pd::indexed_name("depth", static_cast<int>(t), "pfm"), maps[t]);
    if (png16) pd::write_depth_png16(dir / pd::indexed_name("depth", static_cast<int>(t), "png"), maps[t]);
  }
}

std::optional<pd::SegmentationLabelMap> scene_labels(const fs::path& dir) {
  if (fs::exists(dir / layout::kLabels)) return pd::read_labels(dir / layout::kLabels);
  if (fs::exists(dir / layout::kLabelsGt)) return pd::read_labels(dir / layout::kLabelsGt);
  return std::nullopt;
}

pd::SegmentationLabelMap require_labels(const fs::path& dir) {
  auto labels = scene_labels(dir);
  if (!labels) {
    throw pd::Error(pd::ErrorKind::Io, "no " + std::string(layout::kLabels) + " or " + layout::kLabelsGt + " in " +
                                           dir.string() + "; run `planedepth segment " + dir.string() + "` first");
  }
  return *labels;
}

pd::VideoSample load_sample(const fs::path& dir, const pd::PipelineConfig& cfg) {
  require_dir(dir);
  pd::VideoSample s;
  s.name = dir.filename().string();
  if (s.name.empty()) s.name = dir.parent_path().filename().string();
  s.video = pd::read_video(dir / layout::kFrames);
  const int T = s.video.frame_count();
  s.K = fs::exists(dir / layout::kCamera) ? pd::intrinsics_from_json(pd::read_json_file(dir / layout::kCamera))
                                          : cfg.camera(s.video.width(), s.video.height());
  if (cfg.intrinsics) s.K = *cfg.intrinsics;
  s.labels = scene_labels(dir);
  if (fs::is_directory(dir / layout::kDepth)) s.gt_depth = read_depth_dir(dir / layout::kDepth, T);
  if (fs::is_directory(dir / layout::kGc)) {
    s.gc = read_sequence(dir / layout::kGc, "gc", "gcm", T, [](const fs::path& p) { return pd::read_gc_map(p); });
  }
  return s;
}

std::vector<pd::PreparedVideo> prepare_all(const std::vector<std::string>& dirs, const pd::PipelineConfig& cfg,
                                           const pd::ForestModel* gc_model = nullptr) {
  std::vector<pd::PreparedVideo> out;
  for (const auto& d : dirs) {
    std::cerr << "preparing " << d << "\n";
    out.push_back(pd::prepare_video(load_sample(d, cfg), cfg, gc_model));
  }
  return out;
}

std::optional<pd::ForestModel> load_gc_model(const std::string& path, const pd::PipelineConfig& cfg) {
  if (cfg.gc_source != pd::GcSource::Baseline) return std::nullopt;
  if (path.empty()) {
    throw pd::Error(pd::ErrorKind::UntrainedModel,
                    "gc_source is baseline: pass --gc-model FILE (train one with `planedepth train-gc`)");
  }
  return pd::ForestModel::load(path);
}

void print_importance(const pd::ForestModel& m, const std::vector<std::string>& names) {
  if (!m.has_oob_importance()) return;
  std::vector<std::size_t> order(m.oob_importance().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return m.oob_importance()[a] > m.oob_importance()[b]; });
  std::printf("oob error %.6g\ntop features:\n", m.oob_error());
  for (std::size_t k = 0; k < std::min<std::size_t>(8, order.size()); ++k) {
    const std::size_t i = order[k];
    std::printf("  %-28s %.4f\n", i < names.size() ? names[i].c_str() : "?", m.oob_importance()[i]);
  }
}

// Copies gate probabilities from a gates file onto a freshly built graph.
void apply_gate_file(pd::EdgeletGraph& graph, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw pd::Error(pd::ErrorKind::Io, "cannot open " + path.string());
  const pd::EdgeletGraph stored = pd::read_edgelets_jsonl(in);
  std::map<std::tuple<int, int, int>, const pd::Edgelet*> index;
  for (const auto& e : stored.edgelets) index[{e.frame, e.i, e.j}] = &e;
  for (auto& e : graph.edgelets) {
    const auto it = index.find({e.frame, e.i, e.j});
    if (it == index.end()) {
      throw pd::Error(pd::ErrorKind::InconsistentInput,
                      path.string() + " has no gate for regions " + std::to_string(e.i) + "/" + std::to_string(e.j) +
                          " in frame " + std::to_string(e.frame) + "; rerun `planedepth occl`");
    }
    e.unary = it->second->unary;
    e.p_non_occl = it->second->p_non_occl;
  }
}

void write_occlusion_truth(const fs::path& path, const std::vector<pd::OcclusionTruth>& truth) {
  pd::write_file_atomic(path, [&](std::ostream& out) {
    out << "frame,i,j,label\n";
    for (const auto& o : truth) out << o.frame << ',' << o.i << ',' << o.j << ',' << o.label << '\n';
  });
}

// ---- subcommands ---------------------------------------------------------

int cmd_synth(const Globals& g, const std::string& out_dir, const std::string& scene_file, int frames,
              const pd::RandomSceneOptions& opts, bool lidar, int lidar_stride) {
  const auto cfg = make_config(g);
  pd::SyntheticScene scene = scene_file.empty() ? pd::random_scene(cfg.seed, frames, opts)
                                                : pd::scene_from_json(pd::read_json_file(scene_file));
  const pd::SyntheticVideo sv = pd::generate_scene(scene, frames);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  pd::write_video(dir / layout::kFrames, sv.video);
  write_depth_dir(dir / layout::kDepth, sv.depth, true);
  fs::create_directories(dir / layout::kGc);
  for (int t = 0; t < frames; ++t) pd::write_gc_map(dir / layout::kGc / pd::indexed_name("gc", t, "gcm"), sv.gc[t]);
  pd::write_labels(dir / layout::kLabelsGt, sv.labels);
  pd::write_planes_csv(dir / layout::kPlanesGt, pd::plane_records(sv.planes));
  pd::write_json_file(dir / layout::kCamera, pd::to_json(sv.K));
  pd::write_json_file(dir / layout::kScene, pd::to_json(scene));
  write_occlusion_truth(dir / layout::kOcclusionGt, sv.occlusion);
  if (lidar) {
    pd::Extrinsics extr;  // sensor frame = camera frame shifted 0.3 m up
    extr.translation = pd::Vec3(0.0, -0.3, 0.0);
    fs::create_directories(dir / layout::kLidar);
    for (int t = 0; t < frames; ++t) {
      const auto scan = pd::scan_from_planes(sv.labels.frame(t), sv.labels.width, sv.labels.height, sv.planes[t],
                                             sv.K, extr, lidar_stride, cfg.seed + static_cast<std::uint64_t>(t));
      pd::write_point_cloud(dir / layout::kLidar / pd::indexed_name("scan", t, "bin"), scan.points);
    }
    pd::write_json_file(dir / layout::kExtrinsics, pd::to_json(extr));
  }
  std::printf("wrote %s: %d frames, %dx%d, %zu regions\n", dir.string().c_str(), frames, scene.width, scene.height,
              scene.regions.size());
  return 0;
}

int cmd_segment(const Globals& g, const std::string& dir_s) {
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  const auto video = pd::read_video(dir / layout::kFrames);
  const auto forward = pd::forward_flows(video, cfg.flow);
  const auto labels = pd::segment_video(video, forward, cfg.segmentation);
  pd::write_labels(dir / layout::kLabels, labels);
  std::printf("%d regions over %d frames -> %s\n", labels.region_count(), labels.frames,
              (dir / layout::kLabels).string().c_str());
  return 0;
}

int cmd_flow(const Globals& g, const std::string& dir_s) {
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  const auto video = pd::read_video(dir / layout::kFrames);
  const auto backward = pd::backward_flows(video, cfg.flow);
  fs::create_directories(dir / layout::kFlow);
  for (std::size_t t = 0; t < backward.size(); ++t)
    pd::write_flo(dir / layout::kFlow / pd::indexed_name("flow", static_cast<int>(t), "flo"), backward[t]);
  std::printf("wrote %zu backward flow fields to %s\n", backward.size(), (dir / layout::kFlow).string().c_str());
  return 0;
}

int cmd_features(const Globals& g, const std::string& dir_s, const std::string& gc_model_path) {
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  const auto gc_model = load_gc_model(gc_model_path, cfg);
  const auto v = pd::prepare_video(load_sample(dir, cfg), cfg, gc_model ? &*gc_model : nullptr);
  pd::write_features_csv(dir / layout::kFeatures, v.features);
  pd::write_file_atomic(dir / layout::kEdgelets, [&](std::ostream& out) { pd::write_edgelets_jsonl(out, v.edgelets); });
  std::printf("%zu region rows, %zu edgelets\n", v.features.size(), v.edgelets.edgelets.size());
  return 0;
}

int cmd_train_depth(const Globals& g, const std::vector<std::string>& dirs, const std::string& out,
                    const std::string& gc_model_path) {
  const auto cfg = make_config(g);
  const auto gc_model = load_gc_model(gc_model_path, cfg);
  const auto videos = prepare_all(dirs, cfg, gc_model ? &*gc_model : nullptr);
  const auto a = pd::ablation_from_string(g.ablation);
  const auto model = pd::train_depth_model(videos, cfg, a);
  model.save(out);
  std::printf("depth model (%s, %zu features) -> %s\n", pd::to_string(a), model.n_features(), out.c_str());
  print_importance(model, model.feature_names);
  return 0;
}

int cmd_train_occl(const Globals& g, const std::vector<std::string>& dirs, const std::string& out,
                   const std::string& gc_model_path) {
  const auto cfg = make_config(g);
  const auto gc_model = load_gc_model(gc_model_path, cfg);
  const auto videos = prepare_all(dirs, cfg, gc_model ? &*gc_model : nullptr);
  const auto a = pd::ablation_from_string(g.ablation);
  const auto model = pd::train_occlusion_model(videos, cfg, a);
  model.save(out);
  std::printf("occlusion model (%s, %zu features) -> %s\n", pd::to_string(a), model.n_features(), out.c_str());
  print_importance(model, model.feature_names);
  return 0;
}

int cmd_train_gc(const Globals& g, const std::vector<std::string>& dirs, const std::string& out) {
  auto cfg = make_config(g);
  cfg.gc_source = pd::GcSource::Uniform;  // descriptors ignore the geom block
  std::vector<pd::PreparedVideo> videos;
  for (const auto& d : dirs) {
    auto s = load_sample(d, cfg);
    if (s.gc.empty()) {
      throw pd::Error(pd::ErrorKind::Io, "train-gc needs provided gc maps (gc/gc_%06d.gcm) in " + d);
    }
    videos.push_back(pd::prepare_video(std::move(s), cfg));
  }
  const auto model = pd::train_gc_model(videos, cfg);
  model.save(out);
  std::printf("geometric context model -> %s\n", out.c_str());
  print_importance(model, model.feature_names);
  return 0;
}

int cmd_occl(const Globals& g, const std::string& dir_s, const std::string& model_path,
             const std::string& gc_model_path) {
  if (model_path.empty()) {
    throw pd::Error(pd::ErrorKind::UntrainedModel,
                    "occl needs a trained occlusion model: pass --model FILE (train one with `planedepth train-occl`)");
  }
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  const auto model = pd::ForestModel::load(model_path);
  const auto gc_model = load_gc_model(gc_model_path, cfg);
  auto v = pd::prepare_video(load_sample(dir, cfg), cfg, gc_model ? &*gc_model : nullptr);
  pd::estimate_gates(v.edgelets, model, cfg);
  pd::write_file_atomic(dir / layout::kGates, [&](std::ostream& out) { pd::write_edgelets_jsonl(out, v.edgelets); });
  std::size_t non_occl = 0;
  for (const auto& e : v.edgelets.edgelets) non_occl += e.p_non_occl >= 0.5;
  std::printf("%zu edgelets, %zu non-occluding -> %s\n", v.edgelets.edgelets.size(), non_occl,
              (dir / layout::kGates).string().c_str());
  return 0;
}

struct InferOptions {
  std::string depth_model;
  std::string occl_model;
  std::string gc_model;
  std::string out;
  bool oracle_unaries = false;
  bool oracle_gates = false;
  bool png16 = false;
};

int cmd_infer(const Globals& g, const std::string& dir_s, const InferOptions& o) {
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  if (o.depth_model.empty() && !o.oracle_unaries) {
    throw pd::Error(pd::ErrorKind::UntrainedModel,
                    "infer needs a trained depth model: pass --depth-model FILE (train one with `planedepth "
                    "train-depth`) or use --oracle-unaries with ground truth in depth/");
  }
  const bool need_oracle_gates = o.occl_model.empty() && !fs::exists(dir / layout::kGates);
  if (need_oracle_gates && !o.oracle_gates && !o.oracle_unaries) {
    throw pd::Error(pd::ErrorKind::UntrainedModel,
                    "infer needs occlusion gates: pass --occl-model FILE, run `planedepth occl` first, or use "
                    "--oracle-gates");
  }

  pd::VideoSample sample = load_sample(dir, cfg);
  std::vector<pd::DepthMap> unary;
  pd::SegmentationLabelMap labels;
  pd::EdgeletGraph graph;
  std::optional<pd::PreparedVideo> prepared;
  if (o.oracle_unaries || o.depth_model.empty()) {
    if (sample.gt_depth.empty()) throw pd::Error(pd::ErrorKind::Io, "--oracle-unaries needs depth/ ground truth");
    if (!sample.labels) labels = require_labels(dir);
    else labels = *sample.labels;
    unary = sample.gt_depth;
    graph = pd::build_edgelet_graph(labels);
  }
  if (!o.depth_model.empty() && !o.oracle_unaries) {
    const auto gc_model = load_gc_model(o.gc_model, cfg);
    prepared = pd::prepare_video(sample, cfg, gc_model ? &*gc_model : nullptr);
    unary = pd::predict_unary_depth(*prepared, pd::ForestModel::load(o.depth_model));
    labels = prepared->labels;
    graph = prepared->edgelets;
  }

  if (!o.occl_model.empty()) {
    if (!prepared) {
      const auto gc_model = load_gc_model(o.gc_model, cfg);
      prepared = pd::prepare_video(sample, cfg, gc_model ? &*gc_model : nullptr);
      graph = prepared->edgelets;
    }
    pd::estimate_gates(graph, pd::ForestModel::load(o.occl_model), cfg);
  } else if (o.oracle_gates || need_oracle_gates) {
    if (sample.gt_depth.empty()) throw pd::Error(pd::ErrorKind::Io, "--oracle-gates needs depth/ ground truth");
    pd::oracle_gates(graph, labels, sample.gt_depth, cfg.occlusion.gap);
  } else {
    apply_gate_file(graph, dir / layout::kGates);
  }

  const auto result = pd::infer_depth(labels, unary, graph, sample.K, cfg);
  const fs::path out = o.out.empty() ? dir / layout::kPred : fs::path(o.out);
  write_depth_dir(out, result.depth, o.png16);
  pd::write_planes_csv(out / layout::kPlanes, pd::plane_records(result.smoothed));
  int converged = 0;
  for (const auto& f : result.frames) converged += f.converged;
  std::printf("inferred %zu frames (%d converged) -> %s\n", result.depth.size(), converged, out.string().c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& pred_s, const std::string& gt_s, const std::string& classes,
             const std::string& log_base, const std::string& json_out) {
  auto cfg = make_config(g);
  if (!log_base.empty()) cfg.log_base = (log_base == "e") ? pd::LogBase::E : pd::LogBase::Ten;
  if (!log_base.empty() && log_base != "e" && log_base != "10") {
    throw pd::Error(pd::ErrorKind::InvalidArgument, "--log-base must be 10 or e");
  }
  const fs::path pred_p(pred_s), gt_p(gt_s);
  std::vector<pd::DepthMap> pred, gt;
  if (fs::is_regular_file(pred_p)) pred = {pd::read_pfm(pred_p)};
  else pred = read_depth_dir(pred_p);
  if (fs::is_regular_file(gt_p)) gt = {pd::read_pfm(gt_p)};
  else gt = read_depth_dir(gt_p);
  if (pred.size() != gt.size()) {
    throw pd::Error(pd::ErrorKind::DimensionMismatch, "prediction has " + std::to_string(pred.size()) +
                                                          " frames but ground truth has " + std::to_string(gt.size()));
  }
  std::vector<pd::GeometricContextMap> gc;
  if (!classes.empty()) {
    gc = read_sequence(classes, "gc", "gcm", static_cast<int>(gt.size()),
                       [](const fs::path& p) { return pd::read_gc_map(p); });
  }
  const auto report = pd::evaluate(pred, gt, gc, cfg.log_base);
  std::cout << pd::format_report(report, "evaluation");
  if (!json_out.empty()) pd::write_json_file(json_out, pd::to_json(report));
  return 0;
}

int cmd_crossval(const Globals& g, const std::vector<std::string>& dirs, bool compare, const std::string& json_out) {
  const auto cfg = make_config(g);
  if (static_cast<int>(dirs.size()) < g.folds) {
    throw pd::Error(pd::ErrorKind::InvalidArgument, "crossval: " + std::to_string(dirs.size()) +
                                                        " videos cannot fill " + std::to_string(g.folds) + " folds");
  }
  auto base = cfg;
  std::vector<pd::PreparedVideo> videos;
  if (cfg.gc_source == pd::GcSource::Baseline) {
    // Provided maps are needed to train the per-fold classifier; crossval
    // replaces them with baseline predictions fold by fold.
    base.gc_source = pd::GcSource::Provided;
  }
  videos = prepare_all(dirs, base);
  std::vector<pd::Ablation> runs = {pd::ablation_from_string(g.ablation)};
  if (compare) runs = {pd::Ablation::All, pd::Ablation::AppFlow, pd::Ablation::Appearance};
  nlohmann::json all = nlohmann::json::array();
  for (auto a : runs) {
    const auto r = pd::crossval(videos, g.folds, cfg, a, cfg.seed);
    for (std::size_t f = 0; f < r.folds.size(); ++f)
      std::cout << pd::format_report(r.folds[f], std::string(pd::to_string(a)) + " fold " + std::to_string(f));
    std::cout << pd::format_report(r.aggregate, std::string(pd::to_string(a)) + " aggregate");
    std::cout << pd::format_report(r.unary_aggregate, std::string(pd::to_string(a)) + " unary-only aggregate");
    all.push_back(pd::to_json(r));
  }
  if (!json_out.empty()) pd::write_json_file(json_out, compare ? all : all.front());
  return 0;
}

int cmd_project_lidar(const Globals& g, const std::string& dir_s, std::string scans, std::string extrinsics,
                      std::string out) {
  const auto cfg = make_config(g);
  const fs::path dir(dir_s);
  if (scans.empty()) scans = (dir / layout::kLidar).string();
  if (extrinsics.empty()) extrinsics = (dir / layout::kExtrinsics).string();
  if (out.empty()) out = (dir / "depth_lidar").string();
  const auto labels = require_labels(dir);
  const auto video = pd::read_video(dir / layout::kFrames);
  pd::require_same_size(labels.width, labels.height, video.width(), video.height(), "label map");
  const pd::CameraIntrinsics K = fs::exists(dir / layout::kCamera)
                                     ? pd::intrinsics_from_json(pd::read_json_file(dir / layout::kCamera))
                                     : cfg.camera(video.width(), video.height());
  const pd::Extrinsics extr = pd::extrinsics_from_json(pd::read_json_file(extrinsics));
  std::vector<std::vector<pd::LidarHit>> hits;
  std::size_t total = 0;
  for (int t = 0; t < labels.frames; ++t) {
    fs::path p = fs::path(scans) / pd::indexed_name("scan", t, "bin");
    if (!fs::exists(p)) p = fs::path(scans) / pd::indexed_name("scan", t, "xyz");
    if (!fs::exists(p)) throw pd::Error(pd::ErrorKind::Io, "missing scan for frame " + std::to_string(t) + " in " + scans);
    pd::LidarScan scan{pd::read_point_cloud(p), static_cast<double>(t)};
    hits.push_back(pd::project_lidar(scan, extr, K, labels.width, labels.height));
    total += hits.back().size();
  }
  const auto gt = pd::segment_ground_truth(hits, labels, cfg.gt_window);
  write_depth_dir(out, gt, true);
  std::printf("%zu hits over %d frames -> %s\n", total, labels.frames, out.c_str());
  return 0;
}

int cmd_render_preview(const std::string& in_s, const std::string& out_s, bool legend) {
  const fs::path in(in_s), out(out_s);
  if (fs::is_regular_file(in)) {
    pd::write_png_rgb(out, pd::depth_preview(pd::read_pfm(in), legend));
    std::printf("-> %s\n", out.string().c_str());
    return 0;
  }
  const auto maps = read_depth_dir(in);
  fs::create_directories(out);
  for (std::size_t t = 0; t < maps.size(); ++t)
    pd::write_png_rgb(out / pd::indexed_name("preview", static_cast<int>(t), "png"), pd::depth_preview(maps[t], legend));
  std::printf("%zu previews -> %s\n", maps.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video depth from piecewise-planar regions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for forests and synthetic scenes");
  app.add_option("--ablation", g.ablation, "feature set: ALL, App+Flow or Appearance");
  app.add_option("--folds", g.folds, "cross-validation folds")->check(CLI::PositiveNumber);
  app.add_option("--window", g.window, "temporal depth smoothing window (frames)")->check(CLI::PositiveNumber);
  app.add_option("--lambda-conn", g.lambda_conn, "connectivity weight");
  app.add_option("--lambda-cop", g.lambda_cop, "co-planarity weight");

  std::function<int()> run;

  std::string out, scene_file, dir, model, gc_model, json_out;
  std::vector<std::string> dirs;
  int frames = 10;
  bool lidar = false, legend = false, compare = false;
  int lidar_stride = 1;
  pd::RandomSceneOptions opts;

  auto* synth = app.add_subcommand("synth", "generate a synthetic piecewise-planar scene");
  synth->add_option("out", out, "output scene directory")->required();
  synth->add_option("--scene", scene_file, "scene description (JSON); random when omitted");
  synth->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  synth->add_option("--width", opts.width, "random scene width");
  synth->add_option("--height", opts.height, "random scene height");
  synth->add_option("--min-regions", opts.min_regions);
  synth->add_option("--max-regions", opts.max_regions);
  synth->add_option("--noise", opts.pixel_noise, "pixel noise sigma (0..255)");
  synth->add_flag("--lidar", lidar, "also write LiDAR scans and extrinsics");
  synth->add_option("--lidar-stride", lidar_stride, "pixel stride of simulated LiDAR samples")->check(CLI::PositiveNumber);
  synth->callback([&] { run = [&] { return cmd_synth(g, out, scene_file, frames, opts, lidar, lidar_stride); }; });

  auto* segment = app.add_subcommand("segment", "spatio-temporal segmentation -> labels.stseg");
  segment->add_option("dir", dir, "scene directory")->required();
  segment->callback([&] { run = [&] { return cmd_segment(g, dir); }; });

  auto* flow = app.add_subcommand("flow", "dense backward optical flow -> flow/");
  flow->add_option("dir", dir, "scene directory")->required();
  flow->callback([&] { run = [&] { return cmd_flow(g, dir); }; });

  auto* features = app.add_subcommand("features", "region and edgelet features -> features.csv, edgelets.jsonl");
  features->add_option("dir", dir, "scene directory")->required();
  features->add_option("--gc-model", gc_model, "geometric context model (gc_source baseline)");
  features->callback([&] { run = [&] { return cmd_features(g, dir, gc_model); }; });

  auto* train_depth = app.add_subcommand("train-depth", "train the unary depth forest");
  train_depth->add_option("dirs", dirs, "training scene directories")->required();
  train_depth->add_option("--out,-o", out, "model file")->required();
  train_depth->add_option("--gc-model", gc_model, "geometric context model (gc_source baseline)");
  train_depth->callback([&] { run = [&] { return cmd_train_depth(g, dirs, out, gc_model); }; });

  auto* train_occl = app.add_subcommand("train-occl", "train the occlusion boundary forest");
  train_occl->add_option("dirs", dirs, "training scene directories")->required();
  train_occl->add_option("--out,-o", out, "model file")->required();
  train_occl->add_option("--gc-model", gc_model, "geometric context model (gc_source baseline)");
  train_occl->callback([&] { run = [&] { return cmd_train_occl(g, dirs, out, gc_model); }; });

  auto* train_gc = app.add_subcommand("train-gc", "train the baseline geometric context classifier");
  train_gc->add_option("dirs", dirs, "training scene directories with gc/ maps")->required();
  train_gc->add_option("--out,-o", out, "model file")->required();
  train_gc->callback([&] { run = [&] { return cmd_train_gc(g, dirs, out); }; });

  auto* occl = app.add_subcommand("occl", "estimate occlusion gates -> gates.jsonl");
  occl->add_option("dir", dir, "scene directory")->required();
  occl->add_option("--model", model, "occlusion model file");
  occl->add_option("--gc-model", gc_model, "geometric context model (gc_source baseline)");
  occl->callback([&] { run = [&] { return cmd_occl(g, dir, model, gc_model); }; });

  InferOptions io;
  auto* infer = app.add_subcommand("infer", "MRF depth inference -> pred/");
  infer->add_option("dir", dir, "scene directory")->required();
  infer->add_option("--depth-model", io.depth_model, "unary depth model file");
  infer->add_option("--occl-model", io.occl_model, "occlusion model file (else gates.jsonl)");
  infer->add_option("--gc-model", io.gc_model, "geometric context model (gc_source baseline)");
  infer->add_option("--out,-o", io.out, "output directory (default DIR/pred)");
  infer->add_flag("--oracle-unaries", io.oracle_unaries, "use ground-truth depth as the unary");
  infer->add_flag("--oracle-gates", io.oracle_gates, "derive gates from ground-truth depth");
  infer->add_flag("--png16", io.png16, "also write 16-bit PNG depth in millimeters");
  infer->callback([&] { run = [&] { return cmd_infer(g, dir, io); }; });

  std::string pred, gt, classes, log_base;
  auto* eval = app.add_subcommand("eval", "log10 and relative depth error");
  eval->add_option("dir", dir, "scene directory (pred/ against depth/)");
  eval->add_option("--pred", pred, "prediction PFM or directory");
  eval->add_option("--gt", gt, "ground-truth PFM or directory");
  eval->add_option("--classes", classes, "directory of gc_%06d.gcm maps for the per-class breakdown");
  eval->add_option("--log-base", log_base, "10 (default) or e");
  eval->add_option("--json", json_out, "also write the report as JSON");
  eval->callback([&] {
    run = [&] {
      if (dir.empty() && (pred.empty() || gt.empty())) {
        throw pd::Error(pd::ErrorKind::InvalidArgument, "eval needs a scene directory or both --pred and --gt");
      }
      const fs::path d(dir);
      if (pred.empty()) pred = (d / layout::kPred).string();
      if (gt.empty()) gt = (d / layout::kDepth).string();
      if (classes.empty() && !dir.empty() && fs::is_directory(d / layout::kGc)) classes = (d / layout::kGc).string();
      return cmd_eval(g, pred, gt, classes, log_base, json_out);
    };
  });

  auto* cv = app.add_subcommand("crossval", "k-fold cross-validation over whole videos");
  cv->add_option("dirs", dirs, "scene directories")->required();
  cv->add_flag("--compare", compare, "run ALL, App+Flow and Appearance");
  cv->add_option("--json", json_out, "also write the reports as JSON");
  cv->callback([&] { run = [&] { return cmd_crossval(g, dirs, compare, json_out); }; });

  std::string scans, extrinsics;
  auto* pl = app.add_subcommand("project-lidar", "LiDAR scans -> per-region ground-truth depth");
  pl->add_option("dir", dir, "scene directory")->required();
  pl->add_option("--scans", scans, "directory of scan_%06d.bin|xyz (default DIR/lidar)");
  pl->add_option("--extrinsics", extrinsics, "sensor-to-camera transform (default DIR/extrinsics.json)");
  pl->add_option("--out,-o", out, "output directory (default DIR/depth_lidar)");
  pl->callback([&] { run = [&] { return cmd_project_lidar(g, dir, scans, extrinsics, out); }; });

  std::string input;
  auto* rp = app.add_subcommand("render-preview", "color-mapped depth, 0 m blue to 80 m red");
  rp->add_option("input", input, "PFM file or directory of depth_%06d.pfm")->required();
  rp->add_option("--out,-o", out, "PNG file or output directory")->required();
  rp->add_flag("--legend", legend, "append a 0-80 m color bar");
  rp->callback([&] { run = [&] { return cmd_render_preview(input, out, legend); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run();
  } catch (const pd::Error& e) {
    std::cerr << "planedepth: error (" << pd::to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "planedepth: error: " << e.what() << "\n";
    return 1;
  }
}
