#include "geometry.hpp"

#include <limits>

#include "error.hpp"

namespace kitnet {

Vec3 centroid(std::span<const Vec3> points) {
  if (points.empty()) fail(ErrorCode::kInvalidArgument, "centroid of an empty point set");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

Mat3 covariance(std::span<const Vec3> points) {
  const Vec3 c = centroid(points);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - c;
    cov += d * d.transpose();
  }
  return cov / static_cast<double>(points.size());
}

PointCloud transform(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t max_points, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::size_t> chosen;
  if (n <= max_points) {
    chosen.resize(n);
    for (std::size_t i = 0; i < n; ++i) chosen[i] = i;
    return chosen;
  }
  if (max_points == 0) return chosen;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  chosen.reserve(max_points);
  auto next = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  while (chosen.size() < max_points) {
    chosen.push_back(next);
    const Vec3 p = points[next];
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (points[i] - p).squaredNorm());
      if (dist[i] > far) far = dist[i], next = i;
    }
  }
  return chosen;
}

PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t max_points, Rng& rng) {
  if (cloud.size() <= max_points) return cloud;
  PointCloud out;
  for (std::size_t i : farthest_point_indices(cloud.points, max_points, rng)) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace kitnet
