#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "hull.hpp"
#include "mesh.hpp"
#include "shapes.hpp"

using namespace kitnet;
using testutil::code;
using testutil::error_code_of;

namespace {

const char* kCubeObj =
    "# unit cube\n"
    "v -0.5 -0.5 -0.5\nv 0.5 -0.5 -0.5\nv 0.5 0.5 -0.5\nv -0.5 0.5 -0.5\n"
    "v -0.5 -0.5 0.5\nv 0.5 -0.5 0.5\nv 0.5 0.5 0.5\nv -0.5 0.5 0.5\n"
    "f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\n"
    "f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

// Generalized winding number, summed per triangle (solid angle / 4 pi).
double winding(const TriMesh& m, const Vec3& p) {
  double total = 0.0;
  for (const Face& f : m.faces()) {
    const Vec3 a = m.vertices()[f[0]] - p, b = m.vertices()[f[1]] - p, c = m.vertices()[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    total += 2.0 * std::atan2(a.dot(b.cross(c)), la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb);
  }
  return total / (4.0 * std::numbers::pi);
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

// Brute force: distance to the plane when the projection is inside,
// otherwise to the nearest edge.
double surface_distance(const TriMesh& m, const Vec3& p) {
  double best = 1e300;
  for (const Face& f : m.faces()) {
    const Vec3 &a = m.vertices()[f[0]], &b = m.vertices()[f[1]], &c = m.vertices()[f[2]];
    const Vec3 n = (b - a).cross(c - a).normalized();
    const Vec3 q = p - n * n.dot(p - a);
    const bool inside = n.dot((b - a).cross(q - a)) >= 0 && n.dot((c - b).cross(q - b)) >= 0 &&
                        n.dot((a - c).cross(q - c)) >= 0;
    double d = inside ? std::abs(n.dot(p - a))
                      : std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
    best = std::min(best, d);
  }
  return best;
}

double pca_box_volume(const std::vector<Vec3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const Vec3& p : pts) {
    const Vec3 q = es.eigenvectors().transpose() * p;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  return (hi - lo).prod();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string binary_stl(const TriMesh& m) {
  std::string s(80, '\0');
  auto put_u32 = [&](std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); };
  auto put_f = [&](float v) { s.append(reinterpret_cast<const char*>(&v), 4); };
  put_u32(static_cast<std::uint32_t>(m.faces().size()));
  for (const Face& f : m.faces()) {
    for (int k = 0; k < 3; ++k) put_f(0.0f);
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) put_f(static_cast<float>(m.vertices()[f[k]][j]));
    s.append(2, '\0');
  }
  return s;
}

}  // namespace

TEST_CASE("OBJ loading and cleanup") {
  const TriMesh cube = parse_mesh(kCubeObj, MeshFormat::kObj, "cube");
  CHECK(cube.vertices().size() == 8);
  CHECK(cube.faces().size() == 12);
  CHECK(cube.watertight());
  CHECK(cube.volume() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cube.centroid().norm() < 1e-12);

  // an unreferenced vertex is pruned, faces kept
  const TriMesh extra = parse_mesh(std::string(kCubeObj) + "v 9 9 9\n", MeshFormat::kObj);
  CHECK(extra.vertices().size() == 8);
  CHECK(extra.faces().size() == 12);

  // zero-area faces dropped
  const TriMesh degen = parse_mesh(std::string(kCubeObj) + "f 1 1 2\n", MeshFormat::kObj);
  CHECK(degen.faces().size() == 12);

  // quads are fanned, negative indices resolve relative to the end
  const TriMesh quad = parse_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n", MeshFormat::kObj);
  CHECK(quad.faces().size() == 2);
  CHECK_FALSE(quad.watertight());

  // truncated file: error names the byte offset
  const std::string truncated = "v 0 0 0\nv 1 0 0\nv 0 1";
  try {
    parse_mesh(truncated, MeshFormat::kObj);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("byte " + std::to_string(truncated.size())) != std::string::npos);
  }
  CHECK(error_code_of([] { parse_mesh("v 0 0 nan\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", MeshFormat::kObj); }) ==
        code(ErrorCode::kParse));
  CHECK(error_code_of([] { parse_mesh("v 0 0 0\nf 1 2 3\n", MeshFormat::kObj); }) == code(ErrorCode::kParse));
  CHECK(error_code_of([] { parse_mesh("# nothing\n", MeshFormat::kObj); }) == code(ErrorCode::kParse));
}

TEST_CASE("STL and OFF loading agree with OBJ") {
  const TriMesh cube = parse_mesh(kCubeObj, MeshFormat::kObj);
  const auto dir = testutil::scratch_dir("mesh_io");

  write_file(dir / "cube.stl", binary_stl(cube));
  const TriMesh stl = load_mesh(dir / "cube.stl");
  CHECK(stl.vertices().size() == 8);
  CHECK(stl.watertight());
  CHECK(stl.volume() == doctest::Approx(1.0).epsilon(1e-6));

  std::string ascii = "solid c\n";
  for (const Face& f : cube.faces()) {
    ascii += " facet normal 0 0 0\n  outer loop\n";
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = cube.vertices()[f[k]];
      ascii += "   vertex " + std::to_string(v.x()) + " " + std::to_string(v.y()) + " " + std::to_string(v.z()) + "\n";
    }
    ascii += "  endloop\n endfacet\n";
  }
  ascii += "endsolid c\n";
  write_file(dir / "cube_ascii.stl", ascii);
  CHECK(load_mesh(dir / "cube_ascii.stl").volume() == doctest::Approx(1.0).epsilon(1e-6));

  std::string off = "OFF\n8 12 0\n";
  for (const Vec3& v : cube.vertices()) off += std::to_string(v.x()) + " " + std::to_string(v.y()) + " " +
                                              std::to_string(v.z()) + "\n";
  for (const Face& f : cube.faces())
    off += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
  write_file(dir / "cube.off", off);
  const TriMesh o = load_mesh(dir / "cube.off", std::nullopt, 2.0);
  CHECK(o.volume() == doctest::Approx(8.0).epsilon(1e-6));

  // truncated binary STL
  std::string cut = binary_stl(cube);
  cut.resize(84 + 50 * 5 + 7);
  write_file(dir / "cut.stl", cut);
  CHECK(error_code_of([&] { load_mesh(dir / "cut.stl"); }) == code(ErrorCode::kParse));
  CHECK(error_code_of([&] { load_mesh(dir / "missing.obj"); }) == code(ErrorCode::kIo));
  CHECK(error_code_of([&] { load_mesh(dir / "cube.xyz"); }) == code(ErrorCode::kInvalidArgument));

  // save/load round trip
  save_obj(cube, dir / "saved.obj");
  const TriMesh back = load_mesh(dir / "saved.obj");
  CHECK(back.faces().size() == 12);
  CHECK(back.volume() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rigid transform") {
  const TriMesh m = make_extrusion({{0, 0}, {0.1, 0}, {0.1, 0.03}, {0.03, 0.03}, {0.03, 0.08}, {0, 0.08}}, 0.02);
  const TriMesh same = transform(m, Pose::identity());
  CHECK(same.vertices() == m.vertices());
  const TriMesh up = transform(m, Pose::from_translation(Vec3(0, 0, 0.1)));
  for (std::size_t i = 0; i < m.vertices().size(); ++i)
    CHECK(up.vertices()[i].z() == doctest::Approx(m.vertices()[i].z() + 0.1).epsilon(1e-12));
  const TriMesh cube = make_box(1, 1, 1);
  const TriMesh turned = transform(cube, {rot_z(deg2rad(90)), Vec3::Zero()});
  CHECK((turned.bounds().lo - cube.bounds().lo).norm() < 1e-9);
  CHECK((turned.bounds().hi - cube.bounds().hi).norm() < 1e-9);

  Rng rng(3);
  const Pose p{sample_uniform(rng), Vec3(0.3, -0.2, 0.5)};
  const TriMesh back = transform(transform(m, p), p.inverse());
  for (std::size_t i = 0; i < m.vertices().size(); ++i) CHECK((back.vertices()[i] - m.vertices()[i]).norm() < 1e-9);
  CHECK(back.faces() == m.faces());
}

TEST_CASE("convex hull and minimum area rectangle") {
  Rng rng(4);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()));
  const ConvexHull h = convex_hull_3d(pts);
  // every input point is on the inner side of every hull face
  for (const auto& f : h.faces) {
    const Vec3 n = (h.points[f[1]] - h.points[f[0]]).cross(h.points[f[2]] - h.points[f[0]]);
    for (const Vec3& p : pts) CHECK(n.dot(p - h.points[f[0]]) <= 1e-9);
  }
  std::vector<Vec3> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  CHECK(error_code_of([&] { convex_hull_3d(flat); }) == code(ErrorCode::kDegenerate));

  // rotated rectangle: min-area rect recovers its area
  std::vector<Vec2> rect;
  const double a = deg2rad(23);
  for (const Vec2& c : {Vec2(0, 0), Vec2(3, 0), Vec2(3, 1), Vec2(0, 1)})
    rect.push_back(Vec2(std::cos(a) * c.x() - std::sin(a) * c.y(), std::sin(a) * c.x() + std::cos(a) * c.y()));
  CHECK(min_area_rect(convex_hull_2d(rect)).area == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("minimum volume box") {
  const TriMesh box = make_box(2, 1, 1);
  const OrientedBox b = min_volume_obb(box);
  CHECK(b.half_extents[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.half_extents[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(b.half_extents[2] == doctest::Approx(0.5).epsilon(1e-6));
  // first axis is the long one, up to sign
  CHECK(std::abs(b.axes().col(0).dot(Vec3::UnitX())) == doctest::Approx(1.0).epsilon(1e-6));

  const OrientedBox r = min_volume_obb(transform(box, {rot_z(deg2rad(37)), Vec3(1, 2, 3)}));
  CHECK(r.half_extents[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.half_extents[1] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.half_extents[2] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK((r.center - Vec3(1, 2, 3)).norm() < 1e-9);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(Vec3(rng.uniform(-1, 1), 0.5 * rng.uniform(-1, 1), 0.2 * rng.normal()));
    const UnitQuaternion q = sample_uniform(rng);
    for (Vec3& p : pts) p = apply(q, p);
    const OrientedBox o = min_volume_obb(pts);
    CHECK(o.half_extents[0] >= o.half_extents[1]);
    CHECK(o.half_extents[1] >= o.half_extents[2]);
    CHECK(o.half_extents[2] > 0.0);
    CHECK(o.volume() <= pca_box_volume(pts) * (1.0 + 1e-9));
    for (const Vec3& p : pts) CHECK(o.contains(p, 1e-9));
  }
  std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK(error_code_of([&] { min_volume_obb(line); }) == code(ErrorCode::kDegenerate));

  // the box mesh of the box is the box
  const TriMesh bm = box_mesh(b);
  CHECK(bm.watertight());
  CHECK(bm.volume() == doctest::Approx(b.volume()).epsilon(1e-9));
}

TEST_CASE("eccentricity") {
  CHECK(eccentricity(make_box(1, 1, 1)) == doctest::Approx(0.0).scale(1e-9));
  CHECK(eccentricity(make_box(3, 2, 1)) == doctest::Approx(2.0).epsilon(1e-9));
  for (double p : {1.5, 2.0, 4.0}) CHECK(eccentricity(make_box(p, 1, 1)) == doctest::Approx(p - 1.0).epsilon(1e-6));
  Rng rng(6);
  for (const TriMesh& m : procedural_corpus()) {
    const double e0 = eccentricity(m);
    for (int i = 0; i < 3; ++i) {
      const TriMesh moved = transform(m, {sample_uniform(rng), Vec3(rng.normal(), rng.normal(), rng.normal())});
      CHECK_MESSAGE(std::abs(eccentricity(moved) - e0) < 1e-3, m.name());
    }
  }
}

TEST_CASE("containment matches the winding number") {
  const TriMesh cube = make_box(1, 1, 1);
  CHECK(contains(cube, Vec3(0, 0, 0)));
  CHECK_FALSE(contains(cube, Vec3(2, 0, 0)));
  Rng rng(7);
  for (const char* name : {"lbracket_equal", "torus_handle", "handle_u"}) {
    const TriMesh* mesh = nullptr;
    static const auto corpus = procedural_corpus();
    for (const TriMesh& m : corpus)
      if (m.name() == name) mesh = &m;
    REQUIRE(mesh != nullptr);
    const Aabb box = mesh->bounds();
    int checked = 0, mismatched = 0;
    for (int i = 0; i < 1000; ++i) {
      Vec3 p;
      for (int k = 0; k < 3; ++k) p[k] = rng.uniform(box.lo[k] - 0.01, box.hi[k] + 0.01);
      if (surface_distance(*mesh, p) < 1e-6) continue;
      ++checked;
      if (contains(*mesh, p) != (winding(*mesh, p) > 0.5)) ++mismatched;
    }
    CHECK(checked > 900);
    CHECK_MESSAGE(mismatched == 0, name);
  }
  // points on a face plane through edges and vertices still resolve
  CHECK(contains(cube, Vec3(0, 0, 0.4999)));
  CHECK_FALSE(contains(cube, Vec3(0.5, 0.5, 0.6)));

  const TriMesh open = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", MeshFormat::kObj);
  CHECK(error_code_of([&] { contains(open, Vec3::Zero()); }) == code(ErrorCode::kNotWatertight));
}

TEST_CASE("volume sampling") {
  Rng rng(8);
  const TriMesh cube = make_box(1, 1, 1);
  const PointCloud c = sample_volume_points(cube, 10000, rng);
  CHECK(c.size() == 10000);
  CHECK(centroid(c).norm() < 0.02);

  const TriMesh sphere = make_ellipsoid(1, 1, 1, 96, 48);
  const PointCloud s = sample_volume_points(sphere, 20000, rng);
  int inner = 0;
  for (const Vec3& p : s.points) inner += p.norm() < 0.5;
  // (0.5)^3 of the ball, corrected for the polyhedral volume
  const double expected = (4.0 / 3.0 * std::numbers::pi * 0.125) / sphere.volume();
  CHECK(static_cast<double>(inner) / s.size() == doctest::Approx(expected).epsilon(0.08));
  CHECK(std::abs(static_cast<double>(inner) / s.size() - 0.125) < 0.01);

  const TriMesh l = procedural_corpus()[7];
  const PointCloud lp = sample_volume_points(l, 2000, rng);
  for (const Vec3& p : lp.points) CHECK(contains(l, p));

  Rng a(11), b(11);
  CHECK(sample_volume_points(cube, 1, a).points[0] == sample_volume_points(cube, 1, b).points[0]);
  CHECK(error_code_of([&] { sample_volume_points(cube, 0, rng); }) == code(ErrorCode::kInvalidArgument));
}

TEST_CASE("offset mesh grows faces outward") {
  const TriMesh cube = make_box(1, 1, 1);
  const TriMesh big = offset_mesh(cube, 0.1);
  CHECK(big.volume() == doctest::Approx(1.2 * 1.2 * 1.2).epsilon(1e-9));
  const TriMesh r = recentered(transform(cube, Pose::from_translation(Vec3(1, 2, 3))));
  CHECK(r.centroid().norm() < 1e-12);
}

TEST_CASE("procedural corpus") {
  const auto corpus = procedural_corpus();
  CHECK(corpus.size() == 20);
  for (const TriMesh& m : corpus) {
    CHECK_MESSAGE(m.watertight(), m.name());
    CHECK(m.volume() > 0.0);
    CHECK(m.centroid().norm() < 1e-9);
    const double size = m.bounds().extent().maxCoeff();
    CHECK(size >= 0.04 - 1e-9);
    CHECK(size <= 0.15 + 1e-9);
  }
}
