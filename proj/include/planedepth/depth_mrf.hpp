#pragma once

#include <optional>
#include <span>
#include <vector>

#include "planedepth/geometry.hpp"
#include "planedepth/lbfgs.hpp"
#include "planedepth/occlusion.hpp"

namespace planedepth {

/// One region slice: sample rays with their unary depths.
struct MrfRegion {
  int id = 0;     // region id in the label map
  int frame = 0;
  std::vector<Vec3> rays;
  std::vector<double> depths;  // unary d-hat per ray, meters
  Vec3 center_ray = Vec3::UnitZ();
  /// Region-mean unary depth.
  double mean_depth = 1.0;
};

/// Adjacent pair; a and b index MrfProblem::regions.
struct MrfPair {
  int a = 0;
  int b = 0;
  std::vector<Vec3> boundary_rays;
  /// Non-occlusion gate in [0,1].
  double y = 1.0;
};

struct MrfWeights {
  double lambda_conn = 1.0;
  double lambda_cop = 0.5;
  /// Co-planarity at both regions' centers; false uses b's center only.
  bool symmetric_coplanarity = true;
};

struct MrfProblem {
  std::vector<MrfRegion> regions;
  std::vector<MrfPair> pairs;
  MrfWeights weights;

  /// Throws InconsistentInput on any broken invariant.
  void validate() const;
};

/// d_hat * r^T alpha - 1.
double fractional_error(double d_hat, const Vec3& ray, const Vec3& alpha);

/// Sum over samples of fractional_error^2.
double data_energy(const MrfRegion& region, const Vec3& alpha);

/// (1/|B|) sum_p y ((r_p^T a_i - r_p^T a_j) sqrt(d_i d_j))^2 with region-mean d.
double connectivity_energy(const MrfPair& pair, const MrfRegion& ri, const MrfRegion& rj, const Vec3& ai,
                           const Vec3& aj);

/// One direction: y ((r_q^T a_i - r_q^T a_j) d_hat)^2.
double coplanarity_term(double y, const Vec3& center_ray, double d_hat, const Vec3& ai, const Vec3& aj);

/// Sum of the directions enabled by the weights: center of j with d_j, and
/// when symmetric also the center of i with d_i.
double coplanarity_energy(const MrfPair& pair, const MrfRegion& ri, const MrfRegion& rj, const Vec3& ai,
                          const Vec3& aj, bool symmetric = true);

struct EnergyBreakdown {
  double data = 0.0;
  double connectivity = 0.0;  // before lambda
  double coplanarity = 0.0;   // before lambda
  double total = 0.0;
};

/// x stacks the region alphas, 3 per region. When grad is non-null it
/// receives the exact gradient.
double total_energy(const MrfProblem& problem, const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr);
EnergyBreakdown energy_breakdown(const MrfProblem& problem, const Eigen::VectorXd& x);

struct MrfSolution {
  std::vector<PlaneParams> planes;  // parallel to problem.regions
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_history;
};

/// Independent least-squares fit per region; regions too small to fit
/// fall back to a fronto-parallel plane at the mean depth along the center ray.
std::vector<PlaneParams> independent_fits(const MrfProblem& problem);

MrfSolution solve_mrf(const MrfProblem& problem, const LbfgsConfig& config = {},
                      std::optional<std::vector<PlaneParams>> init = std::nullopt);

struct SamplingParams {
  /// Unary samples per region slice; 0 keeps every pixel.
  int max_samples = 200;
};

/// Builds the frame-t problem from a per-pixel unary map. Invalid unary
/// pixels are skipped; regions left without samples are dropped along with
/// their pairs. Each edgelet becomes a pair with y = p_non_occl and the
/// boundary pixels of both sides as boundary rays.
MrfProblem build_mrf_problem(const SegmentationLabelMap& labels, int frame, const DepthMap& unary,
                             std::span<const Edgelet> edgelets, const CameraIntrinsics& K,
                             const MrfWeights& weights = {}, const SamplingParams& sampling = {});

/// planes[t][region]; empty optionals mark regions absent from frame t.
using PlaneTable = std::vector<std::vector<std::optional<PlaneParams>>>;

/// Per region, each alpha component replaced by its median over the
/// region's planes in frames [t - window/2, t + (window-1)/2].
PlaneTable smooth_plane_table(const PlaneTable& planes, int window = 5);

/// Smooths the planes and re-renders one depth map per frame.
std::vector<DepthMap> temporal_depth_smooth(const PlaneTable& planes, const SegmentationLabelMap& labels,
                                            const CameraIntrinsics& K, int window = 5);

}  // namespace planedepth
