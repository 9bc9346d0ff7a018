#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "render.hpp"
#include "so3.hpp"

namespace kitnet {

enum class EstimatorKind { kPerfect, kNoisyOracle, kBruteForce, kExternal };

const char* estimator_kind_name(EstimatorKind kind);
/// Accepts "perfect", "noisy_oracle", "brute_force", "external".
EstimatorKind parse_estimator_kind(std::string_view name);

/// Image-alignment cost minimized by the brute-force search. kBoxExtent is
/// for goal images that show a box around the object (prismatic cavity):
/// the object surface and the box surface do not coincide, so instead the
/// extents of the rotated start cloud along the goal box axes are matched
/// to the box. kAuto lets the caller pick by cavity kind and means
/// kChamfer inside the estimator.
enum class AlignmentCost { kAuto, kChamfer, kBoxExtent };

const char* alignment_cost_name(AlignmentCost cost);
AlignmentCost parse_alignment_cost(std::string_view name);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kBruteForce;
  double sigma_deg = 0.0;  ///< noisy oracle
  // Brute force: candidate rotations are the 31 rotation axes of the
  // icosahedron, both senses, at multiples of grid_step_deg up to
  // max_angle_deg, plus the identity. The best candidate is refined by
  // coordinate descent on the rotation vector, halving the step down to
  // min_step_deg, for at most refine_iters sweeps.
  double grid_step_deg = 10.0;
  double max_angle_deg = 90.0;
  int refine_iters = 60;
  double min_step_deg = 0.5;
  std::size_t max_points = 2048;
  /// Compare only surface seen from both viewpoints: points whose normal,
  /// carried by the candidate rotation, faces away from the other image's
  /// camera are dropped before the Chamfer evaluation.
  bool covisibility = true;
  AlignmentCost cost = AlignmentCost::kAuto;
  std::string endpoint;  ///< external
  double timeout_s = 10.0;

  void validate() const;
};

struct RotationEstimate {
  UnitQuaternion rotation;  ///< canonical
  std::optional<double> confidence;
  double latency_s = 0.0;
};

/// f(I^s, I^g) -> estimated rotation taking the start orientation to the
/// goal orientation, about the object centroid in world axes. Inputs are
/// segmented rasters (background 0). Oracle kinds read `truth`; the others
/// ignore it.
class RotationEstimator {
 public:
  virtual ~RotationEstimator() = default;
  virtual RotationEstimate estimate(const DepthImage& image_start, const DepthImage& image_goal,
                                    const std::optional<UnitQuaternion>& truth) = 0;
};

/// `seed` drives the noisy oracle and the brute-force point subsampling.
std::unique_ptr<RotationEstimator> make_estimator(const EstimatorSpec& spec, const CameraModel& camera,
                                                  std::uint64_t seed);

/// The 31 unit rotation axes of the icosahedral group (6 five-fold, 10
/// three-fold, 15 two-fold), one sense each.
std::vector<Vec3> icosahedral_axes();

/// Candidate rotations of the brute-force grid.
std::vector<UnitQuaternion> brute_force_grid(double grid_step_deg, double max_angle_deg);

struct BruteForceResult {
  UnitQuaternion rotation;
  double cost = 0.0;
  double best_grid_cost = 0.0;
  std::size_t evaluations = 0;
};

/// Symmetric squared Chamfer between the candidate-rotated start cloud and
/// the goal cloud, both centroid-aligned.
double brute_force_cost(const UnitQuaternion& candidate, const PointCloud& cloud_start, const PointCloud& cloud_goal);

/// Grid search plus refinement over an arbitrary cost.
BruteForceResult brute_force_search(const std::function<double(const UnitQuaternion&)>& cost,
                                    const EstimatorSpec& spec);
/// Grid search plus refinement of brute_force_cost on explicit clouds.
BruteForceResult brute_force_search(const PointCloud& cloud_start, const PointCloud& cloud_goal,
                                    const EstimatorSpec& spec);

/// Symmetric Chamfer restricted to the co-visible surface. Start points are
/// carried by the candidate to the goal centroid and kept if their normal
/// faces `eye_goal`; goal points are carried back by the inverse and kept if
/// they face `eye_start`. Both kept sets are re-centred before comparison.
/// Returns +inf when fewer than three points survive on either side.
class CovisibleChamfer {
 public:
  CovisibleChamfer(OrientedCloud start, const Vec3& eye_start, OrientedCloud goal, const Vec3& eye_goal);
  double operator()(const UnitQuaternion& rotation) const;

 private:
  OrientedCloud s_, g_;
  Vec3 cs_, cg_, eye_s_, eye_g_;
};

/// Squared mismatch between the extents of the candidate-rotated start
/// cloud and the goal cloud, measured along the axes of the goal cloud's
/// minimum-volume box.
class BoxExtentCost {
 public:
  BoxExtentCost(PointCloud start, const PointCloud& goal);
  double operator()(const UnitQuaternion& rotation) const;

 private:
  std::vector<Vec3> s_;
  Mat3 axes_;
  Vec3 extent_;
};

}  // namespace kitnet
