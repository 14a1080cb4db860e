#include "planedepth/depth_mrf.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace planedepth {
namespace {

Vec3 alpha_at(const Eigen::VectorXd& x, int region) { return x.segment<3>(3 * region); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void MrfProblem::validate() const {
  if (regions.empty()) throw Error(ErrorKind::EmptyInput, "MRF problem has no regions");
  for (const auto& r : regions) {
    if (r.rays.empty() || r.rays.size() != r.depths.size()) {
      throw Error(ErrorKind::InconsistentInput, "MRF region " + std::to_string(r.id) +
                                                    " needs one unary depth per sample ray (at least one)");
    }
    for (double d : r.depths)
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw Error(ErrorKind::InconsistentInput, "MRF region " + std::to_string(r.id) + " has a non-positive unary");
      }
    if (!(r.mean_depth > 0.0) || !std::isfinite(r.mean_depth)) {
      throw Error(ErrorKind::InconsistentInput, "MRF region mean depth must be positive");
    }
  }
  const int n = static_cast<int>(regions.size());
  for (const auto& p : pairs) {
    if (p.a < 0 || p.b < 0 || p.a >= n || p.b >= n || p.a == p.b) {
      throw Error(ErrorKind::InconsistentInput, "MRF pair references a missing region");
    }
    if (!(p.y >= 0.0 && p.y <= 1.0)) throw Error(ErrorKind::InconsistentInput, "MRF gate y outside [0,1]");
    if (p.boundary_rays.empty()) throw Error(ErrorKind::InconsistentInput, "MRF pair has no boundary rays");
  }
  if (weights.lambda_conn < 0.0 || weights.lambda_cop < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "MRF weights must be non-negative");
  }
}

double fractional_error(double d_hat, const Vec3& ray, const Vec3& alpha) { return d_hat * ray.dot(alpha) - 1.0; }

double data_energy(const MrfRegion& region, const Vec3& alpha) {
  double e = 0.0;
  for (std::size_t k = 0; k < region.rays.size(); ++k) {
    const double f = fractional_error(region.depths[k], region.rays[k], alpha);
    e += f * f;
  }
  return e;
}

double connectivity_energy(const MrfPair& pair, const MrfRegion& ri, const MrfRegion& rj, const Vec3& ai,
                           const Vec3& aj) {
  const double scale = std::sqrt(ri.mean_depth * rj.mean_depth);
  const Vec3 delta = ai - aj;
  double e = 0.0;
  for (const Vec3& r : pair.boundary_rays) {
    const double v = r.dot(delta) * scale;
    e += pair.y * v * v;
  }
  return e / static_cast<double>(pair.boundary_rays.size());
}

double coplanarity_term(double y, const Vec3& center_ray, double d_hat, const Vec3& ai, const Vec3& aj) {
  const double v = (center_ray.dot(ai) - center_ray.dot(aj)) * d_hat;
  return y * v * v;
}

double coplanarity_energy(const MrfPair& pair, const MrfRegion& ri, const MrfRegion& rj, const Vec3& ai,
                          const Vec3& aj, bool symmetric) {
  double e = coplanarity_term(pair.y, rj.center_ray, rj.mean_depth, ai, aj);
  if (symmetric) e += coplanarity_term(pair.y, ri.center_ray, ri.mean_depth, ai, aj);
  return e;
}

EnergyBreakdown energy_breakdown(const MrfProblem& problem, const Eigen::VectorXd& x) {
  if (x.size() != 3 * static_cast<Eigen::Index>(problem.regions.size())) {
    throw Error(ErrorKind::DimensionMismatch, "MRF energy: expected " + std::to_string(3 * problem.regions.size()) +
                                                  " unknowns");
  }
  EnergyBreakdown out;
  for (std::size_t i = 0; i < problem.regions.size(); ++i)
    out.data += data_energy(problem.regions[i], alpha_at(x, static_cast<int>(i)));
  for (const auto& p : problem.pairs) {
    const auto& ri = problem.regions[p.a];
    const auto& rj = problem.regions[p.b];
    const Vec3 ai = alpha_at(x, p.a), aj = alpha_at(x, p.b);
    out.connectivity += connectivity_energy(p, ri, rj, ai, aj);
    out.coplanarity += coplanarity_energy(p, ri, rj, ai, aj, problem.weights.symmetric_coplanarity);
  }
  out.total = out.data + problem.weights.lambda_conn * out.connectivity +
              problem.weights.lambda_cop * out.coplanarity;
  return out;
}

double total_energy(const MrfProblem& problem, const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
  if (grad == nullptr) return energy_breakdown(problem, x).total;
  if (x.size() != 3 * static_cast<Eigen::Index>(problem.regions.size())) {
    throw Error(ErrorKind::DimensionMismatch, "MRF energy: wrong number of unknowns");
  }
  grad->setZero(x.size());
  const double lc = problem.weights.lambda_conn, lp = problem.weights.lambda_cop;
  double data = 0.0, conn = 0.0, cop = 0.0;
  for (std::size_t i = 0; i < problem.regions.size(); ++i) {
    const auto& r = problem.regions[i];
    const Vec3 a = alpha_at(x, static_cast<int>(i));
    Vec3 g = Vec3::Zero();
    for (std::size_t k = 0; k < r.rays.size(); ++k) {
      const double f = fractional_error(r.depths[k], r.rays[k], a);
      data += f * f;
      g += 2.0 * f * r.depths[k] * r.rays[k];
    }
    grad->segment<3>(3 * i) += g;
  }
  for (const auto& p : problem.pairs) {
    const auto& ri = problem.regions[p.a];
    const auto& rj = problem.regions[p.b];
    const Vec3 delta = alpha_at(x, p.a) - alpha_at(x, p.b);
    const double c = p.y * ri.mean_depth * rj.mean_depth / static_cast<double>(p.boundary_rays.size());
    Vec3 g = Vec3::Zero();
    double e = 0.0;
    for (const Vec3& r : p.boundary_rays) {
      const double v = r.dot(delta);
      e += v * v;
      g += v * r;
    }
    conn += c * e;
    g *= 2.0 * c * lc;
    auto add_direction = [&](const Vec3& rq, double d) {
      const double v = rq.dot(delta);
      cop += p.y * d * d * v * v;
      g += 2.0 * lp * p.y * d * d * v * rq;
    };
    add_direction(rj.center_ray, rj.mean_depth);
    if (problem.weights.symmetric_coplanarity) add_direction(ri.center_ray, ri.mean_depth);
    grad->segment<3>(3 * p.a) += g;
    grad->segment<3>(3 * p.b) -= g;
  }
  return data + lc * conn + lp * cop;
}

std::vector<PlaneParams> independent_fits(const MrfProblem& problem) {
  std::vector<PlaneParams> out;
  out.reserve(problem.regions.size());
  for (const auto& r : problem.regions) {
    std::vector<Ray> rays(r.rays.size());
    for (std::size_t k = 0; k < rays.size(); ++k) rays[k].direction = r.rays[k];
    try {
      out.push_back(fit_plane(rays, r.depths));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateGeometry) throw;
      out.push_back({r.center_ray / r.mean_depth});
    }
  }
  return out;
}

MrfSolution solve_mrf(const MrfProblem& problem, const LbfgsConfig& config,
                      std::optional<std::vector<PlaneParams>> init) {
  problem.validate();
  const std::vector<PlaneParams> start = init ? std::move(*init) : independent_fits(problem);
  if (start.size() != problem.regions.size()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_mrf: initial planes do not match the regions");
  }
  Eigen::VectorXd x0(3 * start.size());
  for (std::size_t i = 0; i < start.size(); ++i) x0.segment<3>(3 * i) = start[i].alpha;
  if (!x0.allFinite()) throw Error(ErrorKind::NonFinite, "solve_mrf: non-finite initial planes");
  Eigen::VectorXd g0;
  if (!std::isfinite(total_energy(problem, x0, &g0))) {
    throw Error(ErrorKind::NonFinite, "solve_mrf: non-finite energy at the initial planes");
  }
  // Far regions weigh in with d^2 and narrow ray cones are nearly rank one,
  // so the raw problem is badly conditioned. Substitute alpha_i = L_i^-T z_i
  // with L_i L_i^T the region's data-term Hessian; that term becomes the
  // identity in z and only the pair couplings remain to be resolved.
  const std::size_t n = start.size();
  std::vector<Eigen::Matrix3d> to_alpha(n);  // L^-T
  Eigen::VectorXd z0(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const MrfRegion& r = problem.regions[i];
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (std::size_t k = 0; k < r.rays.size(); ++k) H += r.depths[k] * r.depths[k] * r.rays[k] * r.rays[k].transpose();
    const double ridge = 1e-6 * std::max(H.trace(), r.mean_depth * r.mean_depth);
    H += ridge * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d L = H.llt().matrixL();
    to_alpha[i] = L.transpose().inverse();
    z0.segment<3>(3 * i) = L.transpose() * x0.segment<3>(3 * i);
  }
  const auto alpha_of = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x(3 * n);
    for (std::size_t i = 0; i < n; ++i) x.segment<3>(3 * i) = to_alpha[i] * z.segment<3>(3 * i);
    return x;
  };
  Eigen::VectorXd gx(3 * n);
  const auto result = minimize_lbfgs(
      [&](const Eigen::VectorXd& z, Eigen::VectorXd& gz) {
        const double f = total_energy(problem, alpha_of(z), &gx);
        gz.resize(z.size());
        for (std::size_t i = 0; i < n; ++i) gz.segment<3>(3 * i) = to_alpha[i].transpose() * gx.segment<3>(3 * i);
        return f;
      },
      z0, config);
  const Eigen::VectorXd x = alpha_of(result.x);
  MrfSolution s;
  s.planes.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.planes[i].alpha = x.segment<3>(3 * i);
  s.energy = result.f;
  s.iterations = result.iterations;
  s.converged = result.converged;
  s.energy_history = result.history;
  return s;
}

MrfProblem build_mrf_problem(const SegmentationLabelMap& labels, int frame, const DepthMap& unary,
                             std::span<const Edgelet> edgelets, const CameraIntrinsics& K,
                             const MrfWeights& weights, const SamplingParams& sampling) {
  K.validate();
  require_same_size(unary.width, unary.height, labels.width, labels.height, "unary depth map");
  if (frame < 0 || frame >= labels.frames) throw Error(ErrorKind::InvalidArgument, "build_mrf_problem: bad frame");
  if (sampling.max_samples < 0) throw Error(ErrorKind::InvalidArgument, "max_samples must be >= 0");
  const int W = labels.width;
  const auto f = labels.frame(frame);

  std::map<int, std::vector<std::int32_t>> pixels;
  for (std::int32_t p = 0; p < static_cast<std::int32_t>(f.size()); ++p) pixels[f[p]].push_back(p);

  MrfProblem problem;
  problem.weights = weights;
  std::map<int, int> slot;
  for (const auto& [id, px] : pixels) {
    std::vector<std::int32_t> usable;
    for (std::int32_t p : px)
      if (unary.valid[p] && unary.values[p] > 0.0f && std::isfinite(unary.values[p])) usable.push_back(p);
    if (usable.empty()) continue;
    MrfRegion r;
    r.id = id;
    r.frame = frame;
    const std::size_t n = usable.size();
    const std::size_t m = sampling.max_samples == 0 ? n : std::min<std::size_t>(n, sampling.max_samples);
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::int32_t p = usable[k * n / m];
      r.rays.push_back(pixel_ray(K, p % W, p / W).direction);
      r.depths.push_back(unary.values[p]);
      sum += unary.values[p];
    }
    r.mean_depth = sum / static_cast<double>(m);
    double cx = 0.0, cy = 0.0;
    for (std::int32_t p : px) {
      cx += p % W;
      cy += p / W;
    }
    r.center_ray = pixel_ray(K, cx / px.size(), cy / px.size()).direction;
    slot[id] = static_cast<int>(problem.regions.size());
    problem.regions.push_back(std::move(r));
  }

  for (const auto& e : edgelets) {
    if (e.frame != frame) continue;
    const auto a = slot.find(e.i), b = slot.find(e.j);
    if (a == slot.end() || b == slot.end()) continue;
    MrfPair pair;
    pair.a = a->second;
    pair.b = b->second;
    pair.y = std::clamp(e.p_non_occl, 0.0, 1.0);
    for (const auto* side : {&e.boundary, &e.boundary_j})
      for (std::int32_t p : *side) pair.boundary_rays.push_back(pixel_ray(K, p % W, p / W).direction);
    if (pair.boundary_rays.empty()) continue;
    problem.pairs.push_back(std::move(pair));
  }
  return problem;
}

PlaneTable smooth_plane_table(const PlaneTable& planes, int window) {
  if (window < 1) throw Error(ErrorKind::InvalidArgument, "temporal window must be >= 1");
  const int T = static_cast<int>(planes.size());
  const int before = window / 2, after = (window - 1) / 2;
  PlaneTable out = planes;
  for (int t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < planes[t].size(); ++r) {
      if (!planes[t][r]) continue;
      std::array<std::vector<double>, 3> comp;
      for (int s = std::max(0, t - before); s <= std::min(T - 1, t + after); ++s) {
        if (r >= planes[s].size() || !planes[s][r]) continue;
        for (int c = 0; c < 3; ++c) comp[c].push_back(planes[s][r]->alpha[c]);
      }
      PlaneParams p;
      for (int c = 0; c < 3; ++c) p.alpha[c] = median(comp[c]);
      out[t][r] = p;
    }
  }
  return out;
}

std::vector<DepthMap> temporal_depth_smooth(const PlaneTable& planes, const SegmentationLabelMap& labels,
                                            const CameraIntrinsics& K, int window) {
  if (static_cast<int>(planes.size()) != labels.frames) {
    throw Error(ErrorKind::InconsistentInput, "temporal_depth_smooth: one plane list per frame required");
  }
  const PlaneTable smoothed = smooth_plane_table(planes, window);
  std::vector<DepthMap> out;
  out.reserve(smoothed.size());
  for (int t = 0; t < labels.frames; ++t)
    out.push_back(render_depth(labels.frame(t), labels.width, labels.height, smoothed[t], K));
  return out;
}

}  // namespace planedepth
