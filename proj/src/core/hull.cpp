#include "hull.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "error.hpp"

namespace kitnet {

namespace {

struct HullFace {
  std::array<std::uint32_t, 3> v;
  Vec3 normal;
  double offset;  // normal . x = offset on the plane
  bool alive = true;
};

HullFace make_face(const std::vector<Vec3>& pts, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
  HullFace f;
  f.v = {a, b, c};
  Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  f.normal = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

ConvexHull convex_hull_3d(std::span<const Vec3> input) {
  // Deduplicate exact repeats so the initial simplex search is meaningful.
  std::vector<Vec3> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 4) fail(ErrorCode::kDegenerate, "convex hull needs at least 4 distinct points");

  Aabb box;
  for (const Vec3& p : pts) box.extend(p);
  const double scale = box.extent().norm();
  const double eps = 1e-10 * scale;

  // Initial tetrahedron from extreme points.
  std::uint32_t i0 = 0, i1 = 0;
  {
    int axis = 0;
    box.extent().maxCoeff(&axis);
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
      if (pts[i][axis] < pts[i0][axis]) i0 = i;
      if (pts[i][axis] > pts[i1][axis]) i1 = i;
    }
  }
  if ((pts[i1] - pts[i0]).norm() <= eps) fail(ErrorCode::kDegenerate, "points are coincident");
  const Vec3 line = (pts[i1] - pts[i0]).normalized();
  std::uint32_t i2 = 0;
  double best = -1.0;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - pts[i0]).cross(line).norm();
    if (d > best) best = d, i2 = i;
  }
  if (best <= eps) fail(ErrorCode::kDegenerate, "points are collinear");
  const Vec3 plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  std::uint32_t i3 = 0;
  best = -1.0;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    const double d = std::abs((pts[i] - pts[i0]).dot(plane_n));
    if (d > best) best = d, i3 = i;
  }
  if (best <= eps) fail(ErrorCode::kDegenerate, "points are coplanar");

  std::vector<HullFace> faces;
  auto add_oriented = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& inside) {
    HullFace f = make_face(pts, a, b, c);
    if (f.normal.dot(inside) - f.offset > 0.0) f = make_face(pts, a, c, b);
    faces.push_back(f);
  };
  const Vec3 inner = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  add_oriented(i0, i1, i2, inner);
  add_oriented(i0, i1, i3, inner);
  add_oriented(i0, i2, i3, inner);
  add_oriented(i1, i2, i3, inner);

  std::vector<std::size_t> visible;
  std::unordered_set<std::uint64_t> edges;
  for (std::uint32_t p = 0; p < pts.size(); ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      if (faces[fi].alive && faces[fi].normal.dot(pts[p]) - faces[fi].offset > eps) visible.push_back(fi);
    }
    if (visible.empty()) continue;
    edges.clear();
    for (std::size_t fi : visible) {
      const auto& v = faces[fi].v;
      for (int k = 0; k < 3; ++k) edges.insert(edge_key(v[k], v[(k + 1) % 3]));
    }
    for (std::size_t fi : visible) {
      faces[fi].alive = false;
      const auto v = faces[fi].v;
      for (int k = 0; k < 3; ++k) {
        const std::uint32_t a = v[k], b = v[(k + 1) % 3];
        // Horizon edge: its twin belongs to a face that stays.
        if (!edges.count(edge_key(b, a))) faces.push_back(make_face(pts, a, b, p));
      }
    }
    if (faces.size() > 4 * pts.size() + 64) {
      faces.erase(std::remove_if(faces.begin(), faces.end(), [](const HullFace& f) { return !f.alive; }),
                  faces.end());
    }
  }

  ConvexHull hull;
  std::vector<std::int64_t> remap(pts.size(), -1);
  for (const HullFace& f : faces) {
    if (!f.alive) continue;
    std::array<std::uint32_t, 3> out{};
    for (int k = 0; k < 3; ++k) {
      if (remap[f.v[k]] < 0) {
        remap[f.v[k]] = static_cast<std::int64_t>(hull.points.size());
        hull.points.push_back(pts[f.v[k]]);
      }
      out[k] = static_cast<std::uint32_t>(remap[f.v[k]]);
    }
    hull.faces.push_back(out);
  }
  return hull;
}

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

Rect2 min_area_rect(const std::vector<Vec2>& hull) {
  Rect2 best;
  best.area = std::numeric_limits<double>::infinity();
  const std::size_t n = hull.size();
  if (n == 0) return best;
  auto evaluate = [&](const Vec2& u) {
    const Vec2 w(-u.y(), u.x());
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const Vec2& p : hull) {
      const Vec2 q(p.dot(u), p.dot(w));
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const double area = (hi - lo).prod();
    if (area < best.area) best = {area, u, lo, hi};
  };
  if (n < 3) {
    evaluate(Vec2::UnitX());
    return best;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = hull[(i + 1) % n] - hull[i];
    const double len = e.norm();
    if (len > 0.0) evaluate(e / len);
  }
  return best;
}

}  // namespace kitnet
