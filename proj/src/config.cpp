#include "planedepth/config.hpp"

#include <fstream>
#include <set>

#include "planedepth/formats.hpp"

namespace planedepth {
namespace {

using nlohmann::json;

/// Reads optional keys from one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw Error(ErrorKind::Format, context_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, context_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw Error(ErrorKind::Format, context_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Format, what + ": expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

const char* to_string(GcSource s) {
  switch (s) {
    case GcSource::Provided: return "provided";
    case GcSource::Uniform: return "uniform";
    case GcSource::Baseline: return "baseline";
  }
  return "?";
}

GcSource gc_source_from_string(const std::string& s) {
  if (s == "provided") return GcSource::Provided;
  if (s == "uniform") return GcSource::Uniform;
  if (s == "baseline") return GcSource::Baseline;
  throw Error(ErrorKind::InvalidArgument, "gc source must be provided, uniform or baseline, got '" + s + "'");
}

CameraIntrinsics PipelineConfig::camera(int width, int height) const {
  return intrinsics ? *intrinsics : CameraIntrinsics::defaults_for(width, height);
}

double PipelineConfig::horizon(int width, int height) const {
  return horizon_row ? *horizon_row : camera(width, height).v0;
}

void PipelineConfig::apply_seed(std::uint64_t s) {
  seed = s;
  depth_forest.rng_seed = s;
  occlusion_forest.rng_seed = s + 1;
  gc_forest.rng_seed = s + 2;
}

void PipelineConfig::validate() const {
  if (intrinsics) intrinsics->validate();
  if (segmentation.k < 0.0 || segmentation.min_region_size < 0 || segmentation.sigma < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "config: segmentation parameters must be non-negative");
  }
  if (flow.pyramid_levels < 1 || flow.iterations < 0 || flow.smoothness <= 0.0 || flow.warps_per_level < 1) {
    throw Error(ErrorKind::InvalidArgument, "config: invalid flow parameters");
  }
  if (mrf.lambda_conn < 0.0 || mrf.lambda_cop < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "config: MRF weights must be non-negative");
  }
  if (occlusion.window < 1 || depth_window < 1 || gt_window < 1 || occlusion.pairwise_iterations < 0) {
    throw Error(ErrorKind::InvalidArgument, "config: windows must be >= 1");
  }
  if (sampling.max_samples < 0) throw Error(ErrorKind::InvalidArgument, "config: max_samples must be >= 0");
}

json to_json(const CameraIntrinsics& K) { return {{"fu", K.fu}, {"fv", K.fv}, {"u0", K.u0}, {"v0", K.v0}}; }

CameraIntrinsics intrinsics_from_json(const json& j) {
  Fields f(j, "intrinsics");
  CameraIntrinsics K;
  f.get("fu", K.fu);
  f.get("fv", K.fv);
  f.get("u0", K.u0);
  f.get("v0", K.v0);
  json ignored;
  f.get("width", ignored);
  f.get("height", ignored);
  f.finish();
  K.validate();
  return K;
}

json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"n_random_features_per_node", p.n_random_features_per_node},
          {"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"rng_seed", p.rng_seed},
          {"bootstrap", p.bootstrap}};
}

ForestParams forest_params_from_json(const json& j, ForestParams p) {
  Fields f(j, "forest");
  f.get("n_trees", p.n_trees);
  f.get("n_random_features_per_node", p.n_random_features_per_node);
  f.get("max_depth", p.max_depth);
  f.get("min_samples_leaf", p.min_samples_leaf);
  f.get("rng_seed", p.rng_seed);
  f.get("bootstrap", p.bootstrap);
  f.finish();
  return p;
}

json to_json(const Extrinsics& e) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back(vec_json(e.rotation.row(i).transpose()));
  return {{"rotation", r}, {"translation", vec_json(e.translation)}};
}

Extrinsics extrinsics_from_json(const json& j) {
  Fields f(j, "extrinsics");
  Extrinsics e;
  if (const json* r = f.child("rotation")) {
    if (!r->is_array() || r->size() != 3) throw Error(ErrorKind::Format, "extrinsics.rotation: expected 3 rows");
    for (int i = 0; i < 3; ++i) e.rotation.row(i) = vec_from((*r)[i], "extrinsics.rotation").transpose();
  }
  if (const json* t = f.child("translation")) e.translation = vec_from(*t, "extrinsics.translation");
  f.finish();
  e.validate();
  return e;
}

json to_json(const PipelineConfig& c) {
  json j;
  if (c.intrinsics) j["intrinsics"] = to_json(*c.intrinsics);
  if (c.horizon_row) j["horizon_row"] = *c.horizon_row;
  j["segmentation"] = {{"k", c.segmentation.k},
                       {"min_region_size", c.segmentation.min_region_size},
                       {"sigma", c.segmentation.sigma}};
  j["flow"] = {{"pyramid_levels", c.flow.pyramid_levels},
               {"iterations", c.flow.iterations},
               {"smoothness", c.flow.smoothness},
               {"warps_per_level", c.flow.warps_per_level},
               {"presmooth", c.flow.presmooth}};
  j["depth_forest"] = to_json(c.depth_forest);
  j["occlusion_forest"] = to_json(c.occlusion_forest);
  j["gc_forest"] = to_json(c.gc_forest);
  j["mrf"] = {{"lambda_conn", c.mrf.lambda_conn},
              {"lambda_cop", c.mrf.lambda_cop},
              {"symmetric_coplanarity", c.mrf.symmetric_coplanarity},
              {"max_samples", c.sampling.max_samples},
              {"max_iterations", c.solver.max_iterations},
              {"grad_tol", c.solver.grad_tol},
              {"f_tol", c.solver.f_tol},
              {"memory", c.solver.memory}};
  j["occlusion"] = {{"gap", c.occlusion.gap},
                    {"pairwise_iterations", c.occlusion.pairwise_iterations},
                    {"window", c.occlusion.window}};
  j["depth_window"] = c.depth_window;
  j["gt_window"] = c.gt_window;
  j["gc_source"] = to_string(c.gc_source);
  j["log_base"] = c.log_base == LogBase::Ten ? "10" : "e";
  j["seed"] = c.seed;
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Fields f(j, "config");
  if (const json* k = f.child("intrinsics")) c.intrinsics = intrinsics_from_json(*k);
  if (const json* h = f.child("horizon_row")) c.horizon_row = h->get<double>();
  if (const json* s = f.child("segmentation")) {
    Fields g(*s, "segmentation");
    g.get("k", c.segmentation.k);
    g.get("min_region_size", c.segmentation.min_region_size);
    g.get("sigma", c.segmentation.sigma);
    g.finish();
  }
  if (const json* s = f.child("flow")) {
    Fields g(*s, "flow");
    g.get("pyramid_levels", c.flow.pyramid_levels);
    g.get("iterations", c.flow.iterations);
    g.get("smoothness", c.flow.smoothness);
    g.get("warps_per_level", c.flow.warps_per_level);
    g.get("presmooth", c.flow.presmooth);
    g.finish();
  }
  std::optional<std::uint64_t> seed;
  if (const json* s = f.child("seed")) seed = s->get<std::uint64_t>();
  if (seed) c.apply_seed(*seed);
  if (const json* s = f.child("depth_forest")) c.depth_forest = forest_params_from_json(*s, c.depth_forest);
  if (const json* s = f.child("occlusion_forest")) c.occlusion_forest = forest_params_from_json(*s, c.occlusion_forest);
  if (const json* s = f.child("gc_forest")) c.gc_forest = forest_params_from_json(*s, c.gc_forest);
  if (const json* s = f.child("mrf")) {
    Fields g(*s, "mrf");
    g.get("lambda_conn", c.mrf.lambda_conn);
    g.get("lambda_cop", c.mrf.lambda_cop);
    g.get("symmetric_coplanarity", c.mrf.symmetric_coplanarity);
    g.get("max_samples", c.sampling.max_samples);
    g.get("max_iterations", c.solver.max_iterations);
    g.get("grad_tol", c.solver.grad_tol);
    g.get("f_tol", c.solver.f_tol);
    g.get("memory", c.solver.memory);
    g.finish();
  }
  if (const json* s = f.child("occlusion")) {
    Fields g(*s, "occlusion");
    g.get("gap", c.occlusion.gap);
    g.get("pairwise_iterations", c.occlusion.pairwise_iterations);
    g.get("window", c.occlusion.window);
    g.finish();
  }
  f.get("depth_window", c.depth_window);
  f.get("gt_window", c.gt_window);
  std::string text;
  f.get("gc_source", text);
  if (!text.empty()) c.gc_source = gc_source_from_string(text);
  text.clear();
  f.get("log_base", text);
  if (!text.empty()) {
    if (text == "10") c.log_base = LogBase::Ten;
    else if (text == "e") c.log_base = LogBase::E;
    else throw Error(ErrorKind::Format, "config.log_base must be \"10\" or \"e\"");
  }
  f.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

json to_json(const SyntheticScene& s) {
  json regions = json::array();
  for (const auto& r : s.regions) {
    json jr = {{"name", r.name},
               {"alpha", vec_json(r.plane.alpha)},
               {"extent", {r.x0, r.y0, r.x1, r.y1}},
               {"parent", r.parent},
               {"class", to_string(r.geom_class)},
               {"color", {r.color[0], r.color[1], r.color[2]}},
               {"pattern", to_string(r.pattern)},
               {"pattern_scale", r.pattern_scale},
               {"pattern_contrast", r.pattern_contrast},
               {"pattern_angle", r.pattern_angle},
               {"velocity", vec_json(r.velocity)}};
    regions.push_back(jr);
  }
  return {{"width", s.width},
          {"height", s.height},
          {"intrinsics", to_json(s.K)},
          {"regions", regions},
          {"camera_velocity", vec_json(s.camera_velocity)},
          {"pixel_noise", s.pixel_noise},
          {"gc_noise", s.gc_noise},
          {"seed", s.seed}};
}

SyntheticScene scene_from_json(const json& j) {
  SyntheticScene s;
  Fields f(j, "scene");
  f.get("width", s.width);
  f.get("height", s.height);
  s.K = CameraIntrinsics::defaults_for(s.width, s.height);
  if (const json* k = f.child("intrinsics")) s.K = intrinsics_from_json(*k);
  if (const json* v = f.child("camera_velocity")) s.camera_velocity = vec_from(*v, "scene.camera_velocity");
  f.get("pixel_noise", s.pixel_noise);
  f.get("gc_noise", s.gc_noise);
  f.get("seed", s.seed);
  if (const json* rs = f.child("regions")) {
    if (!rs->is_array()) throw Error(ErrorKind::Format, "scene.regions: expected an array");
    for (const auto& jr : *rs) {
      SceneRegion r;
      Fields g(jr, "scene.region");
      g.get("name", r.name);
      if (const json* a = g.child("alpha")) r.plane.alpha = vec_from(*a, "region.alpha");
      if (const json* e = g.child("extent")) {
        if (!e->is_array() || e->size() != 4) throw Error(ErrorKind::Format, "region.extent: expected [x0,y0,x1,y1]");
        r.x0 = (*e)[0].get<double>();
        r.y0 = (*e)[1].get<double>();
        r.x1 = (*e)[2].get<double>();
        r.y1 = (*e)[3].get<double>();
      }
      g.get("parent", r.parent);
      std::string cls;
      g.get("class", cls);
      if (!cls.empty()) {
        bool found = false;
        for (int c = 0; c < kGeomClasses; ++c)
          if (cls == to_string(static_cast<GeometricClass>(c))) {
            r.geom_class = static_cast<GeometricClass>(c);
            found = true;
          }
        if (!found) throw Error(ErrorKind::Format, "region.class: unknown class '" + cls + "'");
      }
      std::vector<int> color;
      g.get("color", color);
      if (!color.empty()) {
        if (color.size() != 3) throw Error(ErrorKind::Format, "region.color: expected 3 values");
        for (int c = 0; c < 3; ++c) r.color[c] = static_cast<std::uint8_t>(std::clamp(color[c], 0, 255));
      }
      std::string pattern;
      g.get("pattern", pattern);
      if (!pattern.empty()) r.pattern = texture_pattern_from_string(pattern);
      g.get("pattern_scale", r.pattern_scale);
      g.get("pattern_contrast", r.pattern_contrast);
      g.get("pattern_angle", r.pattern_angle);
      if (const json* v = g.child("velocity")) r.velocity = vec_from(*v, "region.velocity");
      g.finish();
      s.regions.push_back(r);
    }
  }
  f.finish();
  s.validate();
  return s;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

}  // namespace planedepth
