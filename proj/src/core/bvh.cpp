#include "bvh.hpp"

#include <algorithm>
#include <cmath>

namespace kitnet {

namespace {

constexpr std::uint32_t kLeafSize = 4;

bool ray_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) {
  for (int axis = 0; axis < 3; ++axis) {
    double t0 = (box.lo[axis] - origin[axis]) * inv_dir[axis];
    double t1 = (box.hi[axis] - origin[axis]) * inv_dir[axis];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf leaves the bounds untouched.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max) return false;
  }
  return true;
}

}  // namespace

bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c,
                  double& t, double& u, double& v) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  const double scale = e1.norm() * e2.norm() * dir.norm();
  if (std::abs(det) <= 1e-14 * scale) return false;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  t = e2.dot(q) * inv;
  return true;
}

Bvh::Bvh(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  tris_.reserve(faces.size());
  std::vector<Vec3> centers;
  centers.reserve(faces.size());
  for (const Face& f : faces) {
    tris_.push_back({vertices[f[0]], vertices[f[1]], vertices[f[2]]});
    centers.push_back((vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0);
  }
  order_.resize(faces.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * faces.size() / kLeafSize + 2);
  nodes_.emplace_back();
  if (!faces.empty()) build(0, 0, static_cast<std::uint32_t>(faces.size()), centers);
}

void Bvh::build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
                const std::vector<Vec3>& centers) {
  Aabb box;
  Aabb center_box;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (const Vec3& p : tris_[order_[i]]) box.extend(p);
    center_box.extend(centers[order_[i]]);
  }
  nodes_[node].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[node].first = begin;
    nodes_[node].count = end - begin;
    return;
  }
  int axis = 0;
  center_box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return centers[a][axis] < centers[b][axis]; });
  // Children are adjacent: left at `first`, right at `first + 1`.
  const auto left = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  nodes_.emplace_back();
  nodes_[node].first = left;
  nodes_[node].count = 0;
  build(left, begin, mid, centers);
  build(left + 1, mid, end, centers);
}

bool Bvh::intersect_triangle(std::uint32_t face, const Vec3& origin, const Vec3& dir,
                             RayHit& hit) const {
  const auto& tri = tris_[face];
  double t = 0.0, u = 0.0, v = 0.0;
  if (!ray_triangle(origin, dir, tri[0], tri[1], tri[2], t, u, v)) return false;
  hit = {t, face, u, v};
  return true;
}

std::optional<RayHit> Bvh::closest_hit(const Vec3& origin, const Vec3& dir, double t_min,
                                       double t_max) const {
  if (tris_.empty()) return std::nullopt;
  const Vec3 inv_dir = dir.cwiseInverse();
  std::optional<RayHit> best;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!ray_box(n.box, origin, inv_dir, t_min, t_max)) continue;
    if (n.count > 0) {
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
        RayHit hit;
        if (intersect_triangle(order_[i], origin, dir, hit) && hit.t > t_min && hit.t < t_max) {
          t_max = hit.t;
          best = hit;
        }
      }
    } else {
      stack[top++] = n.first;
      stack[top++] = n.first + 1;
    }
  }
  return best;
}

void Bvh::all_hits(const Vec3& origin, const Vec3& dir, double t_min,
                   const std::function<void(const RayHit&)>& visit) const {
  if (tris_.empty()) return;
  const Vec3 inv_dir = dir.cwiseInverse();
  const double t_max = std::numeric_limits<double>::infinity();
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!ray_box(n.box, origin, inv_dir, t_min, t_max)) continue;
    if (n.count > 0) {
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
        RayHit hit;
        if (intersect_triangle(order_[i], origin, dir, hit) && hit.t > t_min) visit(hit);
      }
    } else {
      stack[top++] = n.first;
      stack[top++] = n.first + 1;
    }
  }
}

}  // namespace kitnet
