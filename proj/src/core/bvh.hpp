#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "geometry.hpp"

namespace kitnet {

using Face = std::array<std::uint32_t, 3>;

struct RayHit {
  double t = 0.0;        ///< ray parameter, distance in units of |dir|
  std::uint32_t face = 0;
  double u = 0.0;        ///< barycentric weight of vertex 1
  double v = 0.0;        ///< barycentric weight of vertex 2
};

/// Binary bounding-volume hierarchy over a triangle soup. Immutable after
/// construction; queries are safe to run concurrently.
class Bvh {
 public:
  Bvh(const std::vector<Vec3>& vertices, const std::vector<Face>& faces);

  /// Nearest hit with t in (t_min, t_max).
  std::optional<RayHit> closest_hit(const Vec3& origin, const Vec3& dir, double t_min = 0.0,
                                    double t_max = std::numeric_limits<double>::infinity()) const;

  /// Visits every hit with t > t_min, in no particular order.
  void all_hits(const Vec3& origin, const Vec3& dir, double t_min,
                const std::function<void(const RayHit&)>& visit) const;

  const Aabb& bounds() const { return nodes_.front().box; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // child index (inner) or first primitive (leaf)
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  void build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
             const std::vector<Vec3>& centers);
  bool intersect_triangle(std::uint32_t face, const Vec3& origin, const Vec3& dir,
                          RayHit& hit) const;

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Möller–Trumbore. Returns false for rays parallel to the triangle.
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c,
                  double& t, double& u, double& v);

}  // namespace kitnet
