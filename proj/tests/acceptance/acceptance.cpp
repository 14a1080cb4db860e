// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and never adjusted to fit results.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "planedepth/depth_mrf.hpp"
#include "planedepth/eval.hpp"
#include "planedepth/formats.hpp"
#include "planedepth/forest.hpp"
#include "planedepth/geometry.hpp"
#include "planedepth/lidar.hpp"
#include "planedepth/occlusion.hpp"
#include "planedepth/pipeline.hpp"
#include "planedepth/synthetic.hpp"
#include "support.hpp"

namespace pd = planedepth;
using pdtest::Rng;
using pdtest::Vec3;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1 -------------------------------------------------------------------
Outcome geometry_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const pd::PlaneParams plane = pdtest::random_plane(rng);
    const int k = rng.integer(3, 40);
    std::vector<pd::Ray> rays(k);
    std::vector<double> depths(k);
    for (int i = 0; i < k; ++i) {
      rays[i].direction = pdtest::random_ray(rng);
      depths[i] = pd::plane_depth(rays[i], plane);
    }
    const pd::PlaneParams fit = pd::fit_plane(rays, depths);
    worst = std::max(worst, (fit.alpha - plane.alpha).norm() / plane.alpha.norm());
  }
  const double s = seconds_since(t0);
  return {worst < 1e-9 && s < 5.0, fmt("max relative alpha error %.3g, %.2f s", worst, s)};
}

// ---- 2 -------------------------------------------------------------------
Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(2);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const pd::MrfProblem p = pdtest::random_problem(rng, 10);
    const Eigen::VectorXd x = pdtest::random_point(rng, p);
    Eigen::VectorXd g;
    pd::total_energy(p, x, &g);
    const Eigen::VectorXd num =
        pdtest::numeric_gradient([&](const Eigen::VectorXd& z) { return pd::total_energy(p, z); }, x);
    worst = std::max(worst, (g - num).norm() / std::max(g.norm(), 1e-12));
  }
  const double s = seconds_since(t0);
  return {worst < 1e-5 && s < 30.0, fmt("max relative gradient error %.3g, %.2f s", worst, s)};
}

// ---- 3 and 5 share the scene set ------------------------------------------
struct SceneCase {
  pd::SyntheticVideo video;
  pd::EdgeletGraph gates;
};

std::vector<SceneCase> recovery_scenes() {
  std::vector<SceneCase> out;
  pd::RandomSceneOptions opts;
  opts.min_regions = 3;
  opts.max_regions = 8;
  for (int s = 0; s < 20; ++s) {
    const pd::SyntheticScene scene = pd::random_scene(3000 + s, 10, opts);
    SceneCase c{pd::generate_scene(scene, 10), {}};
    c.gates = pd::build_edgelet_graph(c.video.labels);
    pd::oracle_gates(c.gates, c.video.labels, c.video.depth, 2.0);
    out.push_back(std::move(c));
  }
  return out;
}

struct FrameSolve {
  std::vector<pd::DepthMap> depth;
  bool monotone = true;
};

// Per-frame MRF solves rendered without temporal smoothing.
FrameSolve solve_frames(const SceneCase& c, const std::vector<pd::DepthMap>& unary, const pd::PipelineConfig& cfg,
                        bool independent) {
  FrameSolve out;
  const auto& L = c.video.labels;
  for (int t = 0; t < L.frames; ++t) {
    std::vector<pd::Edgelet> es;
    for (const auto& e : c.gates.edgelets)
      if (e.frame == t) es.push_back(e);
    const pd::MrfProblem p = pd::build_mrf_problem(L, t, unary[t], es, c.video.K, cfg.mrf, cfg.sampling);
    std::vector<std::optional<pd::PlaneParams>> planes(L.region_count());
    std::vector<pd::PlaneParams> solved;
    if (independent) {
      solved = pd::independent_fits(p);
    } else {
      const pd::MrfSolution s = pd::solve_mrf(p, cfg.solver);
      for (std::size_t k = 1; k < s.energy_history.size(); ++k)
        if (s.energy_history[k] > s.energy_history[k - 1]) out.monotone = false;
      solved = s.planes;
    }
    for (std::size_t i = 0; i < p.regions.size(); ++i) planes[p.regions[i].id] = solved[i];
    out.depth.push_back(pd::render_depth(L.frame(t), L.width, L.height, planes, c.video.K));
  }
  return out;
}

Outcome exact_recovery(const std::vector<SceneCase>& scenes) {
  const auto t0 = Clock::now();
  const pd::PipelineConfig cfg;
  double worst_mean = 0.0, worst_max = 0.0;
  int bad = 0;
  bool monotone = true;
  for (const auto& c : scenes) {
    const FrameSolve fs = solve_frames(c, c.video.depth, cfg, false);
    const auto e = pdtest::relative_error(fs.depth, c.video.depth);
    worst_mean = std::max(worst_mean, e.mean);
    worst_max = std::max(worst_max, e.max);
    if (e.max >= 1e-3) ++bad;
    monotone = monotone && fs.monotone;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && monotone && s < 120.0,
          fmt("%d/20 scenes above 1e-3; worst per-pixel %.3g, worst scene mean %.3g; energy %s; %.1f s", bad,
              worst_max, worst_mean, monotone ? "non-increasing" : "INCREASED", s)};
}

std::vector<pd::DepthMap> lognormal_noise(const std::vector<pd::DepthMap>& gt, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<pd::DepthMap> out = gt;
  for (auto& m : out)
    for (auto& v : m.values) v = static_cast<float>(v * std::exp(0.1 * rng.normal()));
  return out;
}

Outcome noise_robustness(const std::vector<SceneCase>& scenes) {
  const pd::PipelineConfig cfg;
  int better = 0, better_than_fits = 0;
  std::string rows;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto& c = scenes[k];
    const auto unary = lognormal_noise(c.video.depth, 5000 + k);
    const double e_unary = pdtest::relative_error(unary, c.video.depth).mean;
    const double e_mrf = pdtest::relative_error(solve_frames(c, unary, cfg, false).depth, c.video.depth).mean;
    const double e_fit = pdtest::relative_error(solve_frames(c, unary, cfg, true).depth, c.video.depth).mean;
    better += e_mrf < e_unary;
    better_than_fits += e_mrf < e_fit;
  }
  return {better >= 18, fmt("MRF below unary-only rendering on %d/20 scenes (below independent plane fits on %d/20)",
                            better, better_than_fits)};
}

// ---- 4 -------------------------------------------------------------------
Outcome occlusion_gating() {
  pd::SyntheticScene scene;
  scene.width = 64;
  scene.height = 48;
  scene.K = pd::CameraIntrinsics::defaults_for(64, 48);
  pd::SceneRegion wall;
  wall.name = "wall";
  wall.plane.alpha = Vec3(0.0, 0.0, 1.0 / 30.0);
  pd::SceneRegion box;
  box.name = "box";
  box.plane.alpha = Vec3(0.05, 0.0, 1.0).normalized() / 10.0;
  box.x0 = 20;
  box.x1 = 44;
  box.y0 = 12;
  box.y1 = 36;
  scene.regions = {wall, box};
  const auto v = pd::generate_scene(scene, 1);
  auto edgelets = pd::extract_edgelets(v.labels, 0);

  const auto solve = [&](double y) {
    for (auto& e : edgelets) e.p_non_occl = y;
    const auto p = pd::build_mrf_problem(v.labels, 0, v.depth[0], edgelets, v.K);
    return std::pair{pd::solve_mrf(p), pd::independent_fits(p)};
  };
  const auto [s0, fits] = solve(0.0);
  const auto [s1, fits1] = solve(1.0);
  const auto [s0b, unused] = solve(0.0);
  (void)fits1;
  (void)unused;
  double diff0 = 0.0;
  for (std::size_t i = 0; i < fits.size(); ++i)
    diff0 = std::max(diff0, (s0.planes[i].alpha - fits[i].alpha).norm() / fits[i].alpha.norm());
  const double d_fit = (fits[0].alpha - fits[1].alpha).norm();
  const double d_one = (s1.planes[0].alpha - s1.planes[1].alpha).norm();
  bool same = true;
  for (std::size_t i = 0; i < fits.size(); ++i) same = same && s0.planes[i].alpha == s0b.planes[i].alpha;
  return {diff0 < 1e-6 && d_one < d_fit && same,
          fmt("y=0 vs independent fits %.3g relative; inter-plane distance %.6g (fits) -> %.6g (y=1); %s", diff0,
              d_fit, d_one, same ? "deterministic" : "NOT deterministic")};
}

// ---- 6 -------------------------------------------------------------------
Outcome forest_sanity() {
  const auto t0 = Clock::now();
  Rng rng(6);
  const auto make = [&](int n, pd::FeatureMatrix& X, std::vector<double>& y) {
    X = pd::FeatureMatrix(n, 11);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < 11; ++c) X.at(i, c) = rng.uniform(0.0, 1.0);
      y[i] = 10.0 * X.at(i, 0);
    }
  };
  pd::FeatureMatrix X, Xt;
  std::vector<double> y, yt;
  make(5000, X, y);
  make(1000, Xt, yt);
  pd::ForestParams params;
  params.rng_seed = 42;
  const auto m1 = pd::train_forest(X, y, params, pd::ForestTask::Regression);
  const auto m2 = pd::train_forest(X, y, params, pd::ForestTask::Regression);
  double se = 0.0;
  bool identical = true;
  for (std::size_t i = 0; i < Xt.rows; ++i) {
    const double p1 = m1.predict_value(Xt.row(i)), p2 = m2.predict_value(Xt.row(i));
    identical = identical && p1 == p2;
    se += (p1 - yt[i]) * (p1 - yt[i]);
  }
  const double rmse = std::sqrt(se / static_cast<double>(Xt.rows));
  const auto& imp = m1.oob_importance();
  std::vector<double> rest(imp.begin() + 1, imp.end());
  const double runner_up = *std::max_element(rest.begin(), rest.end());
  const bool first = imp[0] > runner_up;
  const double margin = imp[0] / std::max(runner_up, 1e-300);
  const double s = seconds_since(t0);
  return {rmse < 1.0 && first && margin >= 5.0 && identical && s < 60.0,
          fmt("held-out RMSE %.4f, x0 importance margin %.3gx, reruns %s, %.1f s", rmse, margin,
              identical ? "bit-identical" : "DIFFER", s)};
}

// ---- 7 -------------------------------------------------------------------
Outcome ablation_ordering() {
  const auto t0 = Clock::now();
  pd::PipelineConfig cfg;
  cfg.apply_seed(7);
  std::vector<pd::PreparedVideo> videos;
  for (int i = 0; i < 10; ++i) {
    const auto sv = pd::generate_scene(pd::random_scene(100 + i, 10), 10);
    pd::VideoSample s;
    s.name = "v" + std::to_string(i);
    s.video = sv.video;
    s.K = sv.K;
    s.labels = sv.labels;
    s.gt_depth = sv.depth;
    s.gc = sv.gc;
    videos.push_back(pd::prepare_video(std::move(s), cfg));
  }
  double e[3];
  const pd::Ablation runs[3] = {pd::Ablation::All, pd::Ablation::AppFlow, pd::Ablation::Appearance};
  for (int k = 0; k < 3; ++k) e[k] = pd::crossval(videos, 5, cfg, runs[k], 7).aggregate.overall.log_error;
  const double s = seconds_since(t0);
  return {e[0] <= e[1] && e[0] <= e[2],
          fmt("log10 ALL %.4f, App+Flow %.4f, Appearance %.4f (5-fold, 10 videos, %.0f s)", e[0], e[1], e[2], s)};
}

// ---- 8 -------------------------------------------------------------------
Outcome lidar_pipeline() {
  // Static camera and scene: the ground-truth window then averages the
  // same surface in every frame.
  pd::SyntheticScene scene;
  scene.width = 96;
  scene.height = 72;
  scene.K = pd::CameraIntrinsics::defaults_for(96, 72);
  pd::SceneRegion back;
  back.name = "back";
  back.plane.alpha = Vec3(0.1, -0.05, 1.0).normalized() / 40.0;
  pd::SceneRegion ground;
  ground.name = "ground";
  ground.geom_class = pd::GeometricClass::Ground;
  ground.plane.alpha = Vec3(0.0, 1.0 / 1.6, 0.0);
  ground.y0 = 36 + 96 * 1.6 / 25.0;
  pd::SceneRegion box;
  box.name = "box";
  box.plane.alpha = Vec3(-0.2, 0.0, 1.0).normalized() / 12.0;
  box.x0 = 20;
  box.x1 = 50;
  box.y0 = 15;
  box.y1 = 40;
  pd::SceneRegion sign;
  sign.name = "sign";
  sign.plane.alpha = Vec3(0.0, 0.1, 1.0).normalized() / 20.0;
  sign.x0 = 62;
  sign.x1 = 85;
  sign.y0 = 8;
  sign.y1 = 30;
  scene.regions = {back, ground, box, sign};
  const auto v = pd::generate_scene(scene, 8);
  pd::Extrinsics extr;
  extr.rotation = Eigen::AngleAxisd(0.02, Vec3::UnitY()).toRotationMatrix();
  extr.translation = Vec3(0.1, -0.4, 0.05);
  std::vector<std::vector<pd::LidarHit>> hits;
  for (int t = 0; t < 8; ++t) {
    const auto scan = pd::scan_from_planes(v.labels.frame(t), v.labels.width, v.labels.height, v.planes[t], v.K,
                                           extr, 1, 80 + t);
    hits.push_back(pd::project_lidar(scan, extr, v.K, v.labels.width, v.labels.height));
  }
  const auto gt = pd::segment_ground_truth(hits, v.labels, 5);
  // Per region slice, the rendered depth averaged like the ground truth.
  const auto regions = pd::region_index(v.labels);
  std::vector<pd::DepthMap> rendered_mean = v.depth;
  for (int t = 0; t < 8; ++t)
    for (const auto& r : regions.regions) {
      double sum = 0.0;
      for (auto p : r.pixels[t]) sum += v.depth[t].values[p];
      for (auto p : r.pixels[t]) rendered_mean[t].values[p] = static_cast<float>(sum / r.pixels[t].size());
    }
  const double e_region = pdtest::relative_error(gt, rendered_mean).mean;
  const double e_pixel = pdtest::relative_error(gt, v.depth).mean;
  return {e_region < 0.01,
          fmt("mean relative error %.4g against region-averaged render_depth (%.4g per pixel)", e_region, e_pixel)};
}

// ---- 9 -------------------------------------------------------------------
Outcome metrics_oracle() {
  Rng rng(9);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    const int w = rng.integer(1, 17), h = rng.integer(1, 13), T = rng.integer(1, 4);
    std::vector<pd::DepthMap> pred(T, pd::DepthMap(w, h)), gt(T, pd::DepthMap(w, h));
    for (int t = 0; t < T; ++t)
      for (std::size_t i = 0; i < gt[t].size(); ++i) {
        gt[t].values[i] = static_cast<float>(rng.uniform(0.5, 80.0));
        gt[t].valid[i] = rng.coin(0.8);
        pred[t].values[i] = static_cast<float>(rng.uniform(0.5, 80.0));
        pred[t].valid[i] = rng.coin(0.9);
      }
    gt[0].valid[0] = 1;
    double sl = 0.0, sr = 0.0;
    long count = 0;
    for (int t = 0; t < T; ++t)
      for (std::size_t i = 0; i < gt[t].size(); ++i) {
        if (!gt[t].valid[i]) continue;
        const double d = gt[t].values[i];
        const double dh = pred[t].valid[i] ? pred[t].values[i] : 80.0;
        sl += std::abs(std::log10(d) - std::log10(dh));
        sr += std::abs(d - dh) / d;
        ++count;
      }
    const auto r = pd::evaluate(pred, gt);
    worst = std::max({worst, std::abs(r.overall.log_error - sl / count), std::abs(r.overall.rel_error - sr / count)});
  }
  pd::DepthMap g(4, 3), p(4, 3);
  std::fill(g.values.begin(), g.values.end(), 10.0f);
  std::fill(g.valid.begin(), g.valid.end(), 1);
  std::fill(p.values.begin(), p.values.end(), 20.0f);
  std::fill(p.valid.begin(), p.valid.end(), 1);
  const auto r = pd::evaluate(std::vector{p}, std::vector{g});
  const bool exact = r.overall.log_error == std::log10(2.0) && r.overall.rel_error == 1.0;
  return {worst <= 1e-12 && exact,
          fmt("max deviation from pixel loop %.3g; 10 m vs 20 m gives log10 %.17g, rel %.17g", worst,
              r.overall.log_error, r.overall.rel_error)};
}

// ---- 10 ------------------------------------------------------------------
Outcome format_round_trips() {
  Rng rng(10);
  pdtest::TempDir dir("acc10");
  int failures = 0;
  std::string first;
  const auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (int n = 0; n < 40; ++n) {
    const int w = rng.integer(1, 40), h = rng.integer(1, 30);
    pd::DepthMap d(w, h);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.valid[i] = rng.coin(0.85);
      d.values[i] = d.valid[i] ? static_cast<float>(rng.uniform(0.01, 80.0)) : 0.0f;
    }
    pd::write_pfm(dir.path() / "d.pfm", d);
    const auto d2 = pd::read_pfm(dir.path() / "d.pfm");
    if (d2.values != d.values || d2.valid != d.valid) fail("pfm");

    pd::DepthMap dm = d;
    for (std::size_t i = 0; i < dm.size(); ++i)
      if (dm.valid[i]) dm.values[i] = static_cast<float>(rng.uniform(0.001, pd::kPng16MaxMeters));
    pd::write_depth_png16(dir.path() / "d.png", dm);
    const auto d3 = pd::read_depth_png16(dir.path() / "d.png");
    for (std::size_t i = 0; i < dm.size(); ++i) {
      if (d3.valid[i] != dm.valid[i]) fail("png16 validity");
      if (dm.valid[i] && std::abs(d3.values[i] - dm.values[i]) > 0.0005 + 1e-6) fail("png16 value");
    }

    const int T = rng.integer(1, 4);
    pd::SegmentationLabelMap L(w, h, T);
    for (auto& l : L.labels) l = rng.integer(0, 1000);
    pd::write_labels(dir.path() / "l.stseg", L);
    const auto L2 = pd::read_labels(dir.path() / "l.stseg");
    if (L2.labels != L.labels || L2.width != w || L2.height != h || L2.frames != T) fail("stseg");

    pd::FlowField f(w, h);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.du[i] = static_cast<float>(rng.uniform(-50, 50));
      f.dv[i] = static_cast<float>(rng.uniform(-50, 50));
    }
    pd::write_flo(dir.path() / "f.flo", f);
    const auto f2 = pd::read_flo(dir.path() / "f.flo");
    if (f2.du != f.du || f2.dv != f.dv) fail("flo");

    std::vector<pd::PlaneRecord> planes;
    for (int k = 0; k < rng.integer(0, 30); ++k)
      planes.push_back({rng.integer(0, 99), rng.integer(0, 9),
                        Vec3(rng.normal(), rng.normal(), rng.normal()) * std::pow(10.0, rng.uniform(-6, 3))});
    pd::write_planes_csv(dir.path() / "p.csv", planes);
    const auto p2 = pd::read_planes_csv(dir.path() / "p.csv");
    if (p2.size() != planes.size()) fail("plane csv size");
    for (std::size_t k = 0; k < std::min(p2.size(), planes.size()); ++k)
      if (p2[k].region != planes[k].region || p2[k].frame != planes[k].frame || p2[k].alpha != planes[k].alpha)
        fail("plane csv value");
  }
  return {failures == 0, failures == 0 ? "PFM, PNG16(mm), STSEG1, .flo and plane CSV round-trip on 40 fuzzed inputs"
                                       : fmt("%d mismatches, first: %s", failures, first.c_str())};
}

// ---- 11 ------------------------------------------------------------------
Outcome end_to_end(const std::string& cli) {
  const auto t0 = Clock::now();
  pdtest::TempDir dir("acc11");
  const auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (dir.path() / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  std::vector<std::string> scenes;
  for (int i = 0; i < 5; ++i) scenes.push_back((dir.path() / ("scene" + std::to_string(i))).string());
  std::string all;
  for (const auto& s : scenes) all += " \"" + s + "\"";
  const auto model_depth = (dir.path() / "depth.forest").string();
  const auto model_occl = (dir.path() / "occl.forest").string();
  std::vector<std::string> steps;
  for (int i = 0; i < 5; ++i) steps.push_back("--seed " + std::to_string(1100 + i) + " synth \"" + scenes[i] + "\"");
  for (const auto& s : scenes) {
    steps.push_back("segment \"" + s + "\"");
    steps.push_back("flow \"" + s + "\"");
    steps.push_back("features \"" + s + "\"");
  }
  steps.push_back("train-depth" + all + " -o \"" + model_depth + "\"");
  steps.push_back("train-occl" + all + " -o \"" + model_occl + "\"");
  for (const auto& s : scenes) {
    steps.push_back("occl \"" + s + "\" --model \"" + model_occl + "\"");
    steps.push_back("infer \"" + s + "\" --depth-model \"" + model_depth + "\"");
    steps.push_back("eval \"" + s + "\" --json \"" + s + "/report.json\"");
  }
  for (const auto& step : steps) {
    if (!sh(step)) {
      std::ifstream log(dir.path() / "log.txt");
      std::stringstream ss;
      ss << log.rdbuf();
      return {false, "step failed: planedepth " + step + "\n" + ss.str()};
    }
  }
  double sum = 0.0;
  long pixels = 0;
  for (const auto& s : scenes) {
    const auto j = pd::read_json_file(s + "/report.json");
    const long n = j.at("pixels").get<long>();
    sum += j.at("rel_error").get<double>() * static_cast<double>(n);
    pixels += n;
  }
  const double rel = sum / static_cast<double>(pixels);
  const double s = seconds_since(t0);
  return {rel < 0.5 && s < 600.0, fmt("rel_error %.4f over 5 scenes, %zu CLI steps in %.1f s", rel, steps.size(), s)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = PLANEDEPTH_CLI_PATH;
  if (argc > 1) cli = argv[1];
  int failed = 0;
  const auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("criterion %2d %-26s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  const auto guarded = [&](int n, const char* name, const std::function<Outcome()>& f) {
    try {
      report(n, name, f());
    } catch (const std::exception& e) {
      report(n, name, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded(1, "geometry round trip", geometry_round_trip);
  guarded(2, "gradient correctness", gradient_check);
  std::vector<SceneCase> scenes;
  guarded(3, "exact recovery", [&] {
    scenes = recovery_scenes();
    return exact_recovery(scenes);
  });
  guarded(4, "occlusion gating", occlusion_gating);
  guarded(5, "noise robustness", [&] { return noise_robustness(scenes); });
  guarded(6, "forest sanity", forest_sanity);
  guarded(7, "ablation ordering", ablation_ordering);
  guarded(8, "lidar pipeline", lidar_pipeline);
  guarded(9, "metrics oracle", metrics_oracle);
  guarded(10, "format round trips", format_round_trips);
  guarded(11, "end-to-end smoke", [&] { return end_to_end(cli); });
  std::printf("%d of 11 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
