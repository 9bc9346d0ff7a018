#include "shapes.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace kitnet {

TriMesh make_box(double sx, double sy, double sz, std::string name) {
  OrientedBox box;
  std::array<double, 3> h{0.5 * sx, 0.5 * sy, 0.5 * sz};
  box.half_extents = h;
  return box_mesh(box, std::move(name));
}

TriMesh make_ellipsoid(double rx, double ry, double rz, int slices, int stacks, std::string name) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  verts.emplace_back(0.0, 0.0, rz);
  for (int i = 1; i < stacks; ++i) {
    const double theta = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / slices;
      verts.emplace_back(rx * std::sin(theta) * std::cos(phi), ry * std::sin(theta) * std::sin(phi),
                         rz * std::cos(theta));
    }
  }
  verts.emplace_back(0.0, 0.0, -rz);
  const auto ring = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * slices + (j % slices)); };
  const auto south = static_cast<std::uint32_t>(verts.size() - 1);
  for (int j = 0; j < slices; ++j) {
    faces.push_back({0, ring(1, j), ring(1, j + 1)});
    faces.push_back({south, ring(stacks - 1, j + 1), ring(stacks - 1, j)});
  }
  for (int i = 1; i + 1 < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

namespace {

double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Inclusive of the boundary, so a vertex lying on a candidate ear's edge
// blocks it (otherwise a collinear sliver is left behind).
bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double eps = 1e-12 * (b - a).squaredNorm();
  return cross2(a, b, p) >= -eps && cross2(b, c, p) >= -eps && cross2(c, a, p) >= -eps;
}

}  // namespace

std::vector<std::array<std::uint32_t, 3>> ear_clip(const std::vector<Vec2>& polygon) {
  std::vector<std::uint32_t> idx(polygon.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (signed_area(polygon) < 0.0) std::reverse(idx.begin(), idx.end());
  std::vector<std::array<std::uint32_t, 3>> tris;
  std::size_t guard = 0;
  while (idx.size() > 3) {
    if (++guard > 4 * polygon.size() * polygon.size()) {
      fail(ErrorCode::kInvalidArgument, "ear clipping failed: polygon is not simple");
    }
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::uint32_t a = idx[(i + idx.size() - 1) % idx.size()];
      const std::uint32_t b = idx[i];
      const std::uint32_t c = idx[(i + 1) % idx.size()];
      if (cross2(polygon[a], polygon[b], polygon[c]) <= 0.0) continue;  // reflex
      bool blocked = false;
      for (std::uint32_t k : idx) {
        if (k == a || k == b || k == c) continue;
        if (in_triangle(polygon[k], polygon[a], polygon[b], polygon[c])) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) fail(ErrorCode::kInvalidArgument, "ear clipping failed: polygon is not simple");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

TriMesh make_extrusion(const std::vector<Vec2>& polygon, double thickness, std::string name) {
  if (polygon.size() < 3) fail(ErrorCode::kInvalidArgument, "extrusion needs a polygon of 3+ vertices");
  std::vector<Vec2> poly = polygon;
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  const auto n = static_cast<std::uint32_t>(poly.size());
  const double h = 0.5 * thickness;
  std::vector<Vec3> verts;
  for (const Vec2& p : poly) verts.emplace_back(p.x(), p.y(), -h);
  for (const Vec2& p : poly) verts.emplace_back(p.x(), p.y(), h);
  std::vector<Face> faces;
  for (const auto& t : ear_clip(poly)) {
    faces.push_back({t[0] + n, t[1] + n, t[2] + n});  // top, facing +z
    faces.push_back({t[0], t[2], t[1]});              // bottom, facing -z
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    faces.push_back({i, j, j + n});
    faces.push_back({i, j + n, i + n});
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

TriMesh make_torus(double major, double minor, int rings, int sides, std::string name) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  for (int i = 0; i < rings; ++i) {
    const double u = 2.0 * std::numbers::pi * i / rings;
    for (int j = 0; j < sides; ++j) {
      const double v = 2.0 * std::numbers::pi * j / sides;
      const double r = major + minor * std::cos(v);
      verts.emplace_back(r * std::cos(u), r * std::sin(u), minor * std::sin(v));
    }
  }
  const auto id = [&](int i, int j) { return static_cast<std::uint32_t>((i % rings) * sides + (j % sides)); };
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < sides; ++j) {
      faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

std::vector<TriMesh> procedural_corpus() {
  using P = std::vector<Vec2>;
  std::vector<TriMesh> out;
  auto add = [&](TriMesh m) { out.push_back(recentered(m)); };

  add(make_box(0.06, 0.06, 0.06, "box_cube"));
  add(make_box(0.10, 0.06, 0.02, "box_flat"));
  add(make_box(0.14, 0.04, 0.03, "box_long"));
  add(make_box(0.09, 0.07, 0.035, "box_brick"));
  add(make_ellipsoid(0.035, 0.03, 0.025, 32, 16, "ellipsoid_round"));
  add(make_ellipsoid(0.07, 0.025, 0.02, 32, 16, "ellipsoid_long"));
  add(make_ellipsoid(0.05, 0.04, 0.015, 32, 16, "ellipsoid_flat"));
  add(make_extrusion(P{{0, 0}, {0.08, 0}, {0.08, 0.02}, {0.02, 0.02}, {0.02, 0.08}, {0, 0.08}}, 0.02,
                     "lbracket_equal"));
  add(make_extrusion(P{{0, 0}, {0.12, 0}, {0.12, 0.025}, {0.025, 0.025}, {0.025, 0.06}, {0, 0.06}}, 0.02,
                     "lbracket_long"));
  add(make_extrusion(P{{0, 0}, {0.09, 0}, {0.09, 0.03}, {0.03, 0.03}, {0.03, 0.07}, {0, 0.07}}, 0.035,
                     "lbracket_thick"));
  add(make_extrusion(P{{0, 0}, {0.10, 0}, {0.10, 0.06}, {0.08, 0.06}, {0.08, 0.02}, {0.02, 0.02}, {0.02, 0.06},
                       {0, 0.06}},
                     0.02, "handle_u"));
  add(make_extrusion(P{{0, 0}, {0.13, 0}, {0.13, 0.045}, {0.11, 0.045}, {0.11, 0.018}, {0.02, 0.018},
                       {0.02, 0.045}, {0, 0.045}},
                     0.018, "handle_wide"));
  add(make_extrusion(P{{0, 0.07}, {0, 0.09}, {0.10, 0.09}, {0.10, 0.07}, {0.06, 0.07}, {0.06, 0}, {0.04, 0},
                       {0.04, 0.07}},
                     0.02, "tee"));
  add(make_extrusion(P{{0, 0}, {0.07, 0}, {0.07, 0.02}, {0.045, 0.02}, {0.045, 0.07}, {0.11, 0.07},
                       {0.11, 0.09}, {0.025, 0.09}, {0.025, 0.02}, {0, 0.02}},
                     0.02, "zshape"));
  add(make_extrusion(P{{0.03, 0}, {0.05, 0}, {0.05, 0.03}, {0.08, 0.03}, {0.08, 0.05}, {0.05, 0.05},
                       {0.05, 0.08}, {0.03, 0.08}, {0.03, 0.05}, {0, 0.05}, {0, 0.03}, {0.03, 0.03}},
                     0.02, "cross"));
  add(make_torus(0.035, 0.01, 32, 16, "torus_handle"));
  {
    P hex;
    for (int i = 0; i < 6; ++i) {
      const double a = 2.0 * std::numbers::pi * i / 6.0;
      hex.emplace_back(0.03 * std::cos(a), 0.03 * std::sin(a));
    }
    add(make_extrusion(hex, 0.10, "hex_prism"));
  }
  add(make_extrusion(P{{0, 0}, {0.10, 0}, {0, 0.05}}, 0.04, "wedge"));
  add(make_extrusion(P{{0, 0}, {0.12, 0}, {0.12, 0.02}, {0.08, 0.02}, {0.08, 0.04}, {0.04, 0.04}, {0.04, 0.06},
                       {0, 0.06}},
                     0.03, "stairs"));
  add(make_extrusion(P{{0, 0}, {0.11, 0}, {0.11, 0.02}, {0.025, 0.02}, {0.025, 0.05}, {0.06, 0.05},
                       {0.06, 0.07}, {0, 0.07}},
                     0.02, "jbracket"));
  return out;
}

void write_procedural_corpus(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const TriMesh& m : procedural_corpus()) save_obj(m, dir / (m.name() + ".obj"));
}

}  // namespace kitnet
