#include "planedepth/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "planedepth/flow.hpp"
#include "planedepth/imgproc.hpp"

namespace planedepth {
namespace {

constexpr int kDx[4] = {-1, 1, 0, 0};
constexpr int kDy[4] = {0, 0, -1, 1};

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, std::string(what) + " outside [0,1]");
}

}  // namespace

std::vector<Edgelet> extract_edgelets(const SegmentationLabelMap& labels, int frame) {
  if (frame < 0 || frame >= labels.frames) throw Error(ErrorKind::InvalidArgument, "extract_edgelets: bad frame");
  const int W = labels.width, H = labels.height;
  const auto f = labels.frame(frame);
  std::map<std::pair<int, int>, Edgelet> found;
  auto touch = [&](std::int32_t p, std::int32_t q) {
    const int a = f[p], b = f[q];
    if (a == b) return;
    Edgelet& e = found[{std::min(a, b), std::max(a, b)}];
    if (a < b) {
      e.boundary.push_back(p);
      e.boundary_j.push_back(q);
    } else {
      e.boundary.push_back(q);
      e.boundary_j.push_back(p);
    }
  };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::int32_t p = y * W + x;
      if (x + 1 < W) touch(p, p + 1);
      if (y + 1 < H) touch(p, p + W);
    }
  std::vector<Edgelet> out;
  out.reserve(found.size());
  for (auto& [key, e] : found) {
    e.i = key.first;
    e.j = key.second;
    e.frame = frame;
    for (auto* v : {&e.boundary, &e.boundary_j}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    out.push_back(std::move(e));
  }
  return out;
}

void link_edgelets(EdgeletGraph& graph) {
  graph.neighbors.assign(graph.edgelets.size(), {});
  graph.tracks.clear();
  std::map<std::pair<int, int>, std::vector<int>> by_region;  // (frame, region) -> edgelets
  for (int n = 0; n < static_cast<int>(graph.edgelets.size()); ++n) {
    const Edgelet& e = graph.edgelets[n];
    by_region[{e.frame, e.i}].push_back(n);
    by_region[{e.frame, e.j}].push_back(n);
    graph.tracks[{e.i, e.j}].push_back(n);
  }
  for (const auto& [key, members] : by_region)
    for (int a : members)
      for (int b : members)
        if (a != b) graph.neighbors[a].push_back(b);
  for (auto& nb : graph.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  for (auto& [key, track] : graph.tracks) {
    std::stable_sort(track.begin(), track.end(),
                     [&](int a, int b) { return graph.edgelets[a].frame < graph.edgelets[b].frame; });
  }
}

EdgeletGraph build_edgelet_graph(const SegmentationLabelMap& labels) {
  EdgeletGraph g;
  for (int t = 0; t < labels.frames; ++t) {
    auto es = extract_edgelets(labels, t);
    std::move(es.begin(), es.end(), std::back_inserter(g.edgelets));
  }
  link_edgelets(g);
  return g;
}

std::vector<std::pair<std::int32_t, std::int32_t>> boundary_crossings(const Edgelet& e,
                                                                      const SegmentationLabelMap& labels) {
  const int W = labels.width, H = labels.height;
  const auto f = labels.frame(e.frame);
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  for (std::int32_t p : e.boundary) {
    const int x = p % W, y = p / W;
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
      const std::int32_t q = ny * W + nx;
      if (f[q] == e.j) out.emplace_back(p, q);
    }
  }
  return out;
}

EdgeletFeatures edgelet_features(const Edgelet& e, const RegionFeatures& fi, const RegionFeatures& fj,
                                 const SegmentationLabelMap& labels, const FlowField& flow,
                                 const RgbImage& current, const RgbImage* previous) {
  namespace el = edgelet_layout;
  EdgeletFeatures out{};
  const auto ci = fi.block(FeatureBlock::Color), cj = fj.block(FeatureBlock::Color);
  for (int k = 0; k < layout::kColor; ++k) out[el::kColorOffset + k] = std::abs(ci[k] - cj[k]);
  const auto gi = fi.block(FeatureBlock::Geom), gj = fj.block(FeatureBlock::Geom);
  for (int k = 0; k < layout::kGeom; ++k) out[el::kGeomOffset + k] = std::abs(gi[k] - gj[k]);
  for (int o = 0; o < 3; ++o) {
    const auto mi = fi.motion_group(o), mj = fj.motion_group(o);
    double s = 0.0;
    for (int k = 0; k < layout::kMotionPerOffset; ++k) s += (mi[k] - mj[k]) * (mi[k] - mj[k]);
    out[el::kMotionOffset + o] = std::sqrt(s);
  }
  if (flow.padded) return out;
  require_same_size(flow.width, flow.height, labels.width, labels.height, "edgelet flow");
  require_same_size(current.width, current.height, labels.width, labels.height, "edgelet frame");

  const auto crossings = boundary_crossings(e, labels);
  double diff = 0.0;
  for (const auto& [p, q] : crossings)
    diff += std::hypot(flow.du[p] - flow.du[q], flow.dv[p] - flow.dv[q]);
  if (!crossings.empty()) out[el::kFlowOffset] = diff / static_cast<double>(crossings.size());

  if (previous != nullptr) {
    require_same_size(previous->width, previous->height, labels.width, labels.height, "edgelet frame");
    const int W = labels.width;
    double err = 0.0;
    std::size_t n = 0;
    for (const auto* side : {&e.boundary, &e.boundary_j})
      for (std::int32_t p : *side) {
        const double sx = p % W + flow.du[p], sy = p / W + flow.dv[p];
        const std::uint8_t* c = current.px(static_cast<std::size_t>(p));
        double d2 = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
          const double v = sample_bilinear_rgb(*previous, sx, sy, ch);
          d2 += (c[ch] - v) * (c[ch] - v);
        }
        err += std::sqrt(d2) / 255.0;
        ++n;
      }
    if (n > 0) out[el::kFlowOffset + 1] = err / static_cast<double>(n);
  }
  return out;
}

void compute_edgelet_features(EdgeletGraph& graph, const VideoVolume& video, const SegmentationLabelMap& labels,
                              std::span<const FeatureRow> region_rows, std::span<const FlowField> backward) {
  if (static_cast<int>(backward.size()) != video.frame_count()) {
    throw Error(ErrorKind::InconsistentInput, "compute_edgelet_features: need one backward flow per frame");
  }
  std::map<std::pair<int, int>, const RegionFeatures*> index;
  for (const auto& row : region_rows) index[{row.frame, row.region}] = &row.features;
  for (auto& e : graph.edgelets) {
    const auto a = index.find({e.frame, e.i});
    const auto b = index.find({e.frame, e.j});
    if (a == index.end() || b == index.end()) {
      throw Error(ErrorKind::InconsistentInput, "edgelet (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                                    ") in frame " + std::to_string(e.frame) +
                                                    " lacks region features");
    }
    const RgbImage* prev = e.frame > 0 ? &video.frames[e.frame - 1] : nullptr;
    e.features = edgelet_features(e, *a->second, *b->second, labels, backward[e.frame], video.frames[e.frame], prev);
  }
}

void classify_edgelets(EdgeletGraph& graph, const ForestModel& model, std::span<const int> columns) {
  if (!model.trained()) throw Error(ErrorKind::UntrainedModel, "occlusion classifier is not trained");
  if (model.task() != ForestTask::Classification || model.n_classes() < 2) {
    throw Error(ErrorKind::InvalidArgument, "occlusion classifier must be a classification forest");
  }
  std::vector<double> x;
  for (auto& e : graph.edgelets) {
    if (columns.empty()) {
      x.assign(e.features.begin(), e.features.end());
    } else {
      x.clear();
      for (int c : columns) x.push_back(e.features.at(static_cast<std::size_t>(c)));
    }
    const double p = std::clamp(model.predict(x)[1], 0.0, 1.0);
    e.unary = p;
    e.p_non_occl = p;
  }
}

void smooth_pairwise(EdgeletGraph& graph, int iterations) {
  if (iterations < 0) throw Error(ErrorKind::InvalidArgument, "smooth_pairwise: negative iteration count");
  if (graph.neighbors.size() != graph.edgelets.size()) link_edgelets(graph);
  const std::size_t n = graph.edgelets.size();
  for (const auto& e : graph.edgelets) check_probability(e.unary, "edgelet unary");
  std::vector<double> p(n), next(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = graph.edgelets[k].p_non_occl;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t k = 0; k < n; ++k) {
      const double g = graph.edgelets[k].unary;
      double log1 = std::log(g), log0 = std::log(1.0 - g);
      for (int m : graph.neighbors[k]) {
        log1 += 0.5 * (std::log(p[k]) + std::log(p[m]));
        log0 += 0.5 * (std::log(1.0 - p[k]) + std::log(1.0 - p[m]));
      }
      if (std::isinf(log1) && std::isinf(log0)) {
        next[k] = g;
      } else if (std::isinf(log0)) {
        next[k] = 1.0;
      } else if (std::isinf(log1)) {
        next[k] = 0.0;
      } else {
        next[k] = 1.0 / (1.0 + std::exp(log0 - log1));
      }
    }
    p.swap(next);
  }
  for (std::size_t k = 0; k < n; ++k) graph.edgelets[k].p_non_occl = p[k];
}

void temporal_smooth(EdgeletGraph& graph, int window) {
  if (window < 1) throw Error(ErrorKind::InvalidArgument, "temporal_smooth: window must be >= 1");
  if (graph.tracks.empty() && !graph.edgelets.empty()) link_edgelets(graph);
  std::vector<double> out(graph.edgelets.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = graph.edgelets[k].p_non_occl;
  const int before = window / 2, after = (window - 1) / 2;
  for (const auto& [key, track] : graph.tracks) {
    for (int n : track) {
      const int t = graph.edgelets[n].frame;
      double sum = 0.0;
      int count = 0;
      for (int m : track) {
        const int f = graph.edgelets[m].frame;
        if (f >= t - before && f <= t + after) {
          sum += graph.edgelets[m].p_non_occl;
          ++count;
        }
      }
      out[n] = std::clamp(sum / count, 0.0, 1.0);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) graph.edgelets[k].p_non_occl = out[k];
}

std::optional<int> occlusion_label(const Edgelet& e, const SegmentationLabelMap& labels, const DepthMap& depth,
                                   double gap) {
  require_same_size(depth.width, depth.height, labels.width, labels.height, "occlusion label depth");
  std::vector<double> gaps;
  for (const auto& [p, q] : boundary_crossings(e, labels)) {
    if (!depth.valid[p] || !depth.valid[q]) continue;
    gaps.push_back(std::abs(static_cast<double>(depth.values[p]) - depth.values[q]));
  }
  if (gaps.empty()) return std::nullopt;
  const std::size_t mid = gaps.size() / 2;
  std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
  double median = gaps[mid];
  if (gaps.size() % 2 == 0) {
    const double lower = *std::max_element(gaps.begin(), gaps.begin() + mid);
    median = 0.5 * (median + lower);
  }
  return median > gap ? 0 : 1;
}

void write_edgelets_jsonl(std::ostream& out, const EdgeletGraph& graph) {
  for (const auto& e : graph.edgelets) {
    nlohmann::json j;
    j["i"] = e.i;
    j["j"] = e.j;
    j["frame"] = e.frame;
    j["boundary_size"] = e.boundary.size();
    j["features"] = e.features;
    j["unary"] = e.unary;
    j["p_non_occl"] = e.p_non_occl;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing edgelets");
}

EdgeletGraph read_edgelets_jsonl(std::istream& in) {
  EdgeletGraph g;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Edgelet e;
      e.i = j.at("i").get<int>();
      e.j = j.at("j").get<int>();
      e.frame = j.at("frame").get<int>();
      const auto f = j.at("features").get<std::vector<double>>();
      if (f.size() != e.features.size()) throw Error(ErrorKind::Format, "wrong feature count");
      std::copy(f.begin(), f.end(), e.features.begin());
      e.unary = j.at("unary").get<double>();
      e.p_non_occl = j.at("p_non_occl").get<double>();
      if (e.i >= e.j || e.i < 0) throw Error(ErrorKind::Format, "region pair must satisfy 0 <= i < j");
      check_probability(e.p_non_occl, "p_non_occl");
      check_probability(e.unary, "unary");
      g.edgelets.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::Format, "edgelets line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ErrorKind::Format, "edgelets line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  link_edgelets(g);
  return g;
}

}  // namespace planedepth
