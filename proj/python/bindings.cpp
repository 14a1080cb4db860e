#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "planedepth/config.hpp"
#include "planedepth/depth_mrf.hpp"
#include "planedepth/error.hpp"
#include "planedepth/eval.hpp"
#include "planedepth/flow.hpp"
#include "planedepth/formats.hpp"
#include "planedepth/forest.hpp"
#include "planedepth/preview.hpp"
#include "planedepth/segmentation.hpp"
#include "planedepth/synthetic.hpp"

namespace py = pybind11;
namespace pd = planedepth;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// Depth crosses the boundary as float32 (H, W) with NaN for invalid pixels.
py::array_t<float> depth_to_numpy(const pd::DepthMap& d) {
  py::array_t<float> a({d.height, d.width});
  auto m = a.mutable_unchecked<2>();
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * d.width + x;
      m(y, x) = d.valid[p] ? d.values[p] : std::numeric_limits<float>::quiet_NaN();
    }
  return a;
}

pd::DepthMap depth_from_numpy(const F32& a) {
  if (a.ndim() != 2) throw pd::Error(pd::ErrorKind::InvalidArgument, "depth must be a 2-D array");
  pd::DepthMap d(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const float* src = a.data();
  for (std::size_t p = 0; p < d.size(); ++p) {
    if (!std::isfinite(src[p]) || src[p] <= 0.0f) continue;
    d.values[p] = src[p];
    d.valid[p] = 1;
  }
  return d;
}

std::vector<pd::DepthMap> depth_stack(const F32& a) {
  if (a.ndim() == 2) return {depth_from_numpy(a)};
  if (a.ndim() != 3) throw pd::Error(pd::ErrorKind::InvalidArgument, "depth stack must be (T, H, W)");
  std::vector<pd::DepthMap> out;
  const py::ssize_t H = a.shape(1), W = a.shape(2);
  for (py::ssize_t t = 0; t < a.shape(0); ++t) {
    F32 slice({H, W});
    std::copy_n(a.data() + t * H * W, H * W, slice.mutable_data());
    out.push_back(depth_from_numpy(slice));
  }
  return out;
}

pd::RgbImage image_from_numpy(const U8& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw pd::Error(pd::ErrorKind::InvalidArgument, "image must be (H, W, 3)");
  pd::RgbImage im(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy_n(a.data(), im.data.size(), im.data.begin());
  return im;
}

py::array_t<std::uint8_t> image_to_numpy(const pd::RgbImage& im) {
  py::array_t<std::uint8_t> a({im.height, im.width, 3});
  std::copy(im.data.begin(), im.data.end(), a.mutable_data());
  return a;
}

pd::VideoVolume video_from_numpy(const U8& a) {
  if (a.ndim() != 4 || a.shape(3) != 3) throw pd::Error(pd::ErrorKind::InvalidArgument, "video must be (T, H, W, 3)");
  pd::VideoVolume v;
  const py::ssize_t n = a.shape(1) * a.shape(2) * 3;
  for (py::ssize_t t = 0; t < a.shape(0); ++t) {
    pd::RgbImage im(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)));
    std::copy_n(a.data() + t * n, n, im.data.begin());
    v.frames.push_back(std::move(im));
  }
  return v;
}

py::array_t<std::int32_t> labels_to_numpy(const pd::SegmentationLabelMap& L) {
  py::array_t<std::int32_t> a({L.frames, L.height, L.width});
  std::copy(L.labels.begin(), L.labels.end(), a.mutable_data());
  return a;
}

py::dict report_dict(const pd::EvalReport& r) {
  auto stats = [](const pd::ErrorStats& s) {
    py::dict d;
    d["log_error"] = s.log_error;
    d["rel_error"] = s.rel_error;
    d["pixels"] = s.pixels;
    return d;
  };
  py::dict d = stats(r.overall);
  if (r.per_class) {
    py::dict per;
    for (int c = 0; c < pd::kGeomClasses; ++c)
      per[pd::to_string(static_cast<pd::GeometricClass>(c))] = stats((*r.per_class)[c]);
    d["per_class"] = per;
  }
  return d;
}

py::dict synth(std::uint64_t seed, int frames, int width, int height) {
  pd::RandomSceneOptions o;
  o.width = width;
  o.height = height;
  const auto v = pd::generate_scene(pd::random_scene(seed, frames, o), frames);
  py::array_t<std::uint8_t> video({frames, height, width, 3});
  py::array_t<float> depth({frames, height, width});
  const std::size_t n = static_cast<std::size_t>(width) * height;
  for (int t = 0; t < frames; ++t) {
    std::copy(v.video.frames[t].data.begin(), v.video.frames[t].data.end(), video.mutable_data() + t * n * 3);
    const auto d = depth_to_numpy(v.depth[t]);
    std::copy_n(d.data(), n, depth.mutable_data() + t * n);
  }
  py::list planes;
  for (int t = 0; t < frames; ++t)
    for (std::size_t r = 0; r < v.planes[t].size(); ++r)
      if (v.planes[t][r]) planes.append(py::make_tuple(static_cast<int>(r), t, v.planes[t][r]->alpha.x(),
                                                       v.planes[t][r]->alpha.y(), v.planes[t][r]->alpha.z()));
  py::dict out;
  out["video"] = video;
  out["depth"] = depth;
  out["labels"] = labels_to_numpy(v.labels);
  out["planes"] = planes;
  out["K"] = py::make_tuple(v.K.fu, v.K.fv, v.K.u0, v.K.v0);
  return out;
}

// regions: list of (rays (N,3), depths (N,)); pairs: list of (a, b, boundary rays (M,3), y).
py::dict solve_planes(const py::list& regions, const py::list& pairs, double lambda_conn, double lambda_cop) {
  pd::MrfProblem p;
  p.weights.lambda_conn = lambda_conn;
  p.weights.lambda_cop = lambda_cop;
  auto rays_of = [](const F64& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw pd::Error(pd::ErrorKind::InvalidArgument, "rays must be (N, 3)");
    std::vector<pd::Vec3> out;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
      out.push_back(pd::Vec3(a.at(i, 0), a.at(i, 1), a.at(i, 2)).normalized());
    return out;
  };
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto t = regions[i].cast<py::tuple>();
    pd::MrfRegion r;
    r.id = static_cast<int>(i);
    r.rays = rays_of(t[0].cast<F64>());
    r.depths = t[1].cast<std::vector<double>>();
    double s = 0.0;
    pd::Vec3 c = pd::Vec3::Zero();
    for (std::size_t k = 0; k < r.rays.size(); ++k) {
      s += r.depths[k];
      c += r.rays[k];
    }
    if (!r.rays.empty()) {
      r.mean_depth = s / static_cast<double>(r.rays.size());
      r.center_ray = c.normalized();
    }
    p.regions.push_back(std::move(r));
  }
  for (const auto& item : pairs) {
    const auto t = item.cast<py::tuple>();
    p.pairs.push_back({t[0].cast<int>(), t[1].cast<int>(), rays_of(t[2].cast<F64>()), t[3].cast<double>()});
  }
  p.validate();
  const auto s = pd::solve_mrf(p);
  py::array_t<double> alpha({static_cast<py::ssize_t>(s.planes.size()), py::ssize_t{3}});
  auto m = alpha.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.planes.size(); ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = s.planes[i].alpha[c];
  py::dict out;
  out["alpha"] = alpha;
  out["energy"] = s.energy;
  out["iterations"] = s.iterations;
  out["converged"] = s.converged;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Depth from piecewise-planar video segments";

  static py::exception<pd::Error> error(m, "PlanedepthError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pd::Error& e) {
      py::set_error(error, (std::string(pd::to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("read_pfm", [](const std::string& path) { return depth_to_numpy(pd::read_pfm(path)); },
        "Depth map as float32 (H, W); NaN marks invalid pixels.");
  m.def("write_pfm", [](const std::string& path, const F32& depth) { pd::write_pfm(path, depth_from_numpy(depth)); });

  m.def("camera_defaults", [](int w, int h) {
    const auto K = pd::CameraIntrinsics::defaults_for(w, h);
    return py::make_tuple(K.fu, K.fv, K.u0, K.v0);
  });

  m.def("synth", &synth, py::arg("seed") = 0, py::arg("frames") = 8, py::arg("width") = 96, py::arg("height") = 72,
        "Random piecewise-planar scene: video, depth, labels, planes and intrinsics.");

  m.def("segment", [](const U8& video, double k, int min_region_size) {
    const auto v = video_from_numpy(video);
    pd::SegmentationParams p;
    p.k = k;
    p.min_region_size = min_region_size;
    const auto flows = pd::forward_flows(v);
    return labels_to_numpy(pd::segment_video(v, flows, p));
  }, py::arg("video"), py::arg("k") = pd::SegmentationParams{}.k,
     py::arg("min_region_size") = pd::SegmentationParams{}.min_region_size,
     "Spatio-temporal segmentation of a (T, H, W, 3) uint8 video.");

  m.def("flow", [](const U8& a, const U8& b) {
    const auto f = pd::dense_flow(image_from_numpy(a), image_from_numpy(b));
    py::array_t<float> out({f.height, f.width, 2});
    float* dst = out.mutable_data();
    for (std::size_t p = 0; p < f.du.size(); ++p) {
      dst[2 * p] = f.du[p];
      dst[2 * p + 1] = f.dv[p];
    }
    return out;
  }, "Dense flow (H, W, 2) taking pixels of a to their match in b.");

  m.def("evaluate", [](const F32& pred, const F32& gt, const std::string& log_base) {
    const auto p = depth_stack(pred), g = depth_stack(gt);
    if (log_base != "10" && log_base != "e")
      throw pd::Error(pd::ErrorKind::InvalidArgument, "log_base must be \"10\" or \"e\"");
    return report_dict(pd::evaluate(p, g, {}, log_base == "e" ? pd::LogBase::E : pd::LogBase::Ten));
  }, py::arg("pred"), py::arg("gt"), py::arg("log_base") = "10");

  m.def("solve_planes", &solve_planes, py::arg("regions"), py::arg("pairs") = py::list(),
        py::arg("lambda_conn") = pd::MrfWeights{}.lambda_conn, py::arg("lambda_cop") = pd::MrfWeights{}.lambda_cop,
        "Joint plane fit. regions: [(rays (N,3), depths (N,))]; pairs: [(a, b, boundary rays (M,3), y)].");

  m.def("depth_preview", [](const F32& depth, bool legend) {
    return image_to_numpy(pd::depth_preview(depth_from_numpy(depth), legend));
  }, py::arg("depth"), py::arg("legend") = false);

  m.def("feature_names", [] { return pd::feature_names(); });
  m.def("default_config", [] { return pd::to_json(pd::PipelineConfig{}).dump(); },
        "Default pipeline configuration as a JSON string.");

  py::class_<pd::ForestModel>(m, "ForestModel")
      .def_static("load", py::overload_cast<const std::string&>(&pd::ForestModel::load))
      .def("save", py::overload_cast<const std::string&>(&pd::ForestModel::save, py::const_))
      .def("predict", [](const pd::ForestModel& f, const F64& X) {
        if (X.ndim() != 2) throw pd::Error(pd::ErrorKind::InvalidArgument, "X must be 2-D");
        py::list out;
        for (py::ssize_t i = 0; i < X.shape(0); ++i)
          out.append(f.predict(std::span<const double>(X.data() + i * X.shape(1), X.shape(1))));
        return out;
      })
      .def("oob_importance", [](const pd::ForestModel& f) { return pd::oob_importance(f); })
      .def_property_readonly("schema_hash", &pd::ForestModel::schema_hash)
      .def_readwrite("feature_names", &pd::ForestModel::feature_names);

  m.def("train_forest", [](const F64& X, const F64& y, int n_trees, bool classification, std::uint64_t seed) {
    if (X.ndim() != 2 || y.ndim() != 1 || y.shape(0) != X.shape(0))
      throw pd::Error(pd::ErrorKind::DimensionMismatch, "X must be (N, D) and y (N,)");
    pd::FeatureMatrix M(X.shape(0), X.shape(1));
    std::copy_n(X.data(), M.data.size(), M.data.begin());
    pd::ForestParams p;
    p.n_trees = n_trees;
    p.rng_seed = seed;
    p.n_random_features_per_node = std::min<int>(p.n_random_features_per_node, static_cast<int>(M.cols));
    return pd::train_forest(M, std::span<const double>(y.data(), y.shape(0)), p,
                            classification ? pd::ForestTask::Classification : pd::ForestTask::Regression);
  }, py::arg("X"), py::arg("y"), py::arg("n_trees") = 50, py::arg("classification") = false, py::arg("seed") = 0);
}
