#pragma once

#include <limits>
#include <span>
#include <vector>

#include "so3.hpp"

namespace kitnet {

/// World-frame points in meters.
struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

Vec3 centroid(std::span<const Vec3> points);
inline Vec3 centroid(const PointCloud& cloud) { return centroid(cloud.points); }

/// Sample covariance about the centroid (divides by n).
Mat3 covariance(std::span<const Vec3> points);

PointCloud transform(const PointCloud& cloud, const Pose& pose);

/// Greedy farthest-point subsample to at most max_points points, starting
/// from an rng-chosen point. Returns the input unchanged when it is small
/// enough.
PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t max_points, Rng& rng);
/// Indices chosen by farthest_point_sample, in selection order.
std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t max_points, Rng& rng);

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
};

}  // namespace kitnet
