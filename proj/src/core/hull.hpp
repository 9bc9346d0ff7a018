#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geometry.hpp"

namespace kitnet {

struct ConvexHull {
  std::vector<Vec3> points;                          ///< hull vertices
  std::vector<std::array<std::uint32_t, 3>> faces;   ///< outward (counter-clockwise)
};

/// Incremental 3D hull. Throws kDegenerate for coplanar or collinear input.
ConvexHull convex_hull_3d(std::span<const Vec3> points);

using Vec2 = Eigen::Vector2d;

/// Andrew's monotone chain; counter-clockwise, no repeated end point.
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);

struct Rect2 {
  double area = 0.0;
  Vec2 axis_u = Vec2::UnitX();  ///< unit direction of the first side
  Vec2 lo = Vec2::Zero();       ///< extent along (axis_u, perp(axis_u))
  Vec2 hi = Vec2::Zero();
};

/// Minimum-area enclosing rectangle of a convex polygon; one side is flush
/// with a polygon edge.
Rect2 min_area_rect(const std::vector<Vec2>& hull);

}  // namespace kitnet
