#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geometry.hpp"
#include "mesh.hpp"
#include "render.hpp"

namespace kitnet {

/// Monte-Carlo percent fit with its normal-approximation 95 % interval.
struct FitResult {
  double kappa_hat = 0.0;
  std::size_t n_samples = 0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

/// kappa_hat ± 1.96 sqrt(kappa_hat (1 - kappa_hat) / n), clamped to [0, 1].
FitResult fit_interval(double kappa_hat, std::size_t n);

/// Fraction of n points, uniform in the posed object volume, that lie inside
/// the posed cavity. Both meshes must be watertight.
FitResult percent_fit(const TriMesh& object, const Pose& object_pose, const TriMesh& cavity, const Pose& cavity_pose,
                      std::size_t n, Rng& rng);

/// Static 3-d tree for nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Index of and squared distance to the nearest stored point.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_ for leaves
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance from
/// a to b plus the same from b to a. Throws on an empty cloud.
double chamfer(const PointCloud& a, const PointCloud& b);

/// Chamfer distance between R·a and b for many rotations R, where both
/// clouds are first moved to their own centroids. Both kd-trees are built
/// once: the b→a term is evaluated as R⁻¹·b against a.
class RotationalChamfer {
 public:
  RotationalChamfer(const PointCloud& a, const PointCloud& b);
  // Centres given by the caller, e.g. from the clouds before subsampling.
  RotationalChamfer(const PointCloud& a, const PointCloud& b, const Vec3& centroid_a, const Vec3& centroid_b);
  double operator()(const UnitQuaternion& rotation) const;
  const Vec3& centroid_a() const { return centroid_a_; }
  const Vec3& centroid_b() const { return centroid_b_; }

 private:
  std::vector<Vec3> a_, b_;
  Vec3 centroid_a_, centroid_b_;
  KdTree tree_a_, tree_b_;
};

struct Baseline2dResult {
  /// Rotation about the vertical axis through the object-cloud centroid
  /// followed by the horizontal centroid offset: x -> R (x - c_o) + c_o + t.
  UnitQuaternion rotation;
  Vec3 translation = Vec3::Zero();
  double angle_deg = 0.0;  ///< in (-180, 180]
  double cost = 0.0;
  Vec3 object_centroid = Vec3::Zero();

  Pose as_pose() const;
};

/// Planar alignment baseline: segment both images against the workspace
/// plane, deproject, align centroids, and search the 360 rotations about the
/// vertical axis in 1° steps for the smallest Chamfer cost. Ties go to the
/// smallest |angle|. Clouds are farthest-point subsampled to max_points.
Baseline2dResult baseline_2d(const DepthImage& image_object, const DepthImage& image_cavity_goal,
                             const CameraModel& camera, double plane_depth, double slack,
                             std::size_t max_points, Rng& rng);

/// Rotation with the same angle as true_rotation about a uniformly random axis.
UnitQuaternion baseline_random(const UnitQuaternion& true_rotation, Rng& rng);

}  // namespace kitnet
