#include "mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include <Eigen/SVD>

#include "error.hpp"
#include "hull.hpp"

namespace kitnet {

// ---------------------------------------------------------------------------
// TriMesh

struct TriMesh::ObbCache {
  std::once_flag once;
  std::optional<OrientedBox> box;
  std::exception_ptr error;
};

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces, std::string name)
    : name_(std::move(name)), obb_cache_(std::make_shared<ObbCache>()) {
  for (const Vec3& v : vertices) {
    if (!v.allFinite()) fail(ErrorCode::kInvalidArgument, "mesh has non-finite vertex coordinates");
  }
  // Weld exact duplicates.
  std::map<std::array<double, 3>, std::uint32_t> welded;
  std::vector<std::uint32_t> weld_map(vertices.size());
  std::vector<Vec3> unique;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const std::array<double, 3> key{vertices[i].x(), vertices[i].y(), vertices[i].z()};
    auto [it, inserted] = welded.emplace(key, static_cast<std::uint32_t>(unique.size()));
    if (inserted) unique.push_back(vertices[i]);
    weld_map[i] = it->second;
  }
  std::vector<Face> kept;
  kept.reserve(faces.size());
  for (const Face& f : faces) {
    for (std::uint32_t idx : f) {
      if (idx >= vertices.size()) fail(ErrorCode::kInvalidArgument, "face index out of range");
    }
    const Face g{weld_map[f[0]], weld_map[f[1]], weld_map[f[2]]};
    if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;
    const Vec3& a = unique[g[0]];
    const Vec3& b = unique[g[1]];
    const Vec3& c = unique[g[2]];
    const double longest = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    if ((b - a).cross(c - a).norm() <= 1e-12 * longest) continue;
    kept.push_back(g);
  }
  if (kept.empty()) fail(ErrorCode::kInvalidArgument, "mesh is empty (no non-degenerate faces)");

  // Prune unreferenced vertices, keeping the original order.
  std::vector<std::int64_t> remap(unique.size(), -1);
  for (const Face& f : kept) {
    for (std::uint32_t idx : f) remap[idx] = 0;
  }
  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (remap[i] == 0) {
      remap[i] = static_cast<std::int64_t>(vertices_.size());
      vertices_.push_back(unique[i]);
    }
  }
  faces_.reserve(kept.size());
  for (const Face& f : kept) {
    faces_.push_back({static_cast<std::uint32_t>(remap[f[0]]), static_cast<std::uint32_t>(remap[f[1]]),
                      static_cast<std::uint32_t>(remap[f[2]])});
  }

  std::unordered_map<std::uint64_t, int> edge_use;
  edge_use.reserve(faces_.size() * 3);
  for (const Face& f : faces_) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = std::min(f[k], f[(k + 1) % 3]);
      const std::uint32_t b = std::max(f[k], f[(k + 1) % 3]);
      ++edge_use[(static_cast<std::uint64_t>(a) << 32) | b];
    }
  }
  watertight_ = std::all_of(edge_use.begin(), edge_use.end(), [](const auto& e) { return e.second == 2; });

  double signed_volume = 0.0;
  Vec3 moment = Vec3::Zero();
  for (const Face& f : faces_) {
    const Vec3& a = vertices_[f[0]];
    const Vec3& b = vertices_[f[1]];
    const Vec3& c = vertices_[f[2]];
    const double v = a.dot(b.cross(c)) / 6.0;
    signed_volume += v;
    moment += v * (a + b + c) / 4.0;
  }
  if (watertight_ && signed_volume < 0.0) {
    for (Face& f : faces_) std::swap(f[1], f[2]);
  }
  volume_ = std::abs(signed_volume);
  const Aabb vbox = [&] {
    Aabb b;
    for (const Vec3& v : vertices_) b.extend(v);
    return b;
  }();
  const double box_volume = std::max(vbox.extent().prod(), 1e-300);
  if (watertight_ && volume_ > 1e-12 * box_volume) {
    centroid_ = moment / signed_volume;
  } else {
    centroid_ = kitnet::centroid(vertices_);
  }
  bvh_ = std::make_shared<const Bvh>(vertices_, faces_);
}

const OrientedBox& TriMesh::obb() const {
  std::call_once(obb_cache_->once, [this] {
    try {
      obb_cache_->box = min_volume_obb(std::span<const Vec3>(vertices_));
    } catch (...) {
      obb_cache_->error = std::current_exception();
    }
  });
  if (obb_cache_->error) std::rethrow_exception(obb_cache_->error);
  return *obb_cache_->box;
}

TriMesh TriMesh::with_name(std::string name) const {
  TriMesh copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

bool OrientedBox::contains(const Vec3& p, double tol) const {
  const Vec3 local = kitnet::apply(kitnet::inverse(rotation), p - center);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(local[i]) > half_extents[i] + tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  fail(ErrorCode::kParse, "parse error at byte " + std::to_string(offset) + ": " + what);
}

struct Token {
  std::string_view text;
  std::size_t offset = 0;
};

/// Whitespace tokenizer that tracks byte offsets and, optionally, line ends.
class Scanner {
 public:
  explicit Scanner(std::string_view data) : data_(data) {}

  bool at_end() const { return pos_ >= data_.size(); }
  std::size_t offset() const { return pos_; }

  /// Next token on the current line; empty at end of line or input.
  Token next_in_line() {
    while (pos_ < data_.size() && (data_[pos_] == ' ' || data_[pos_] == '\t' || data_[pos_] == '\r')) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    return {data_.substr(start, pos_ - start), start};
  }

  /// Next token anywhere, skipping '#' comments.
  Token next() {
    for (;;) {
      while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
      if (pos_ < data_.size() && data_[pos_] == '#') {
        skip_line();
        continue;
      }
      break;
    }
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    return {data_.substr(start, pos_ - start), start};
  }

  void skip_line() {
    while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
    if (pos_ < data_.size()) ++pos_;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

double parse_double(const Token& tok, std::size_t end_offset) {
  if (tok.text.empty()) parse_fail(end_offset, "expected a number");
  double value = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) parse_fail(tok.offset, "invalid number '" + std::string(tok.text) + "'");
  if (!std::isfinite(value)) parse_fail(tok.offset, "non-finite coordinate");
  return value;
}

long long parse_int(const Token& tok, std::size_t end_offset) {
  if (tok.text.empty()) parse_fail(end_offset, "expected an integer");
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
  if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
    parse_fail(tok.offset, "invalid integer '" + std::string(tok.text) + "'");
  }
  return value;
}

void fan(const std::vector<std::uint32_t>& poly, std::vector<Face>& faces) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) faces.push_back({poly[0], poly[i], poly[i + 1]});
}

TriMesh parse_obj(std::string_view data, std::string name, double scale) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  Scanner sc(data);
  while (!sc.at_end()) {
    const Token key = sc.next_in_line();
    if (key.text == "v") {
      Vec3 v;
      for (int k = 0; k < 3; ++k) v[k] = parse_double(sc.next_in_line(), sc.offset());
      verts.push_back(v * scale);
    } else if (key.text == "f") {
      std::vector<std::uint32_t> poly;
      for (Token t = sc.next_in_line(); !t.text.empty(); t = sc.next_in_line()) {
        const std::string_view idx_text = t.text.substr(0, t.text.find('/'));
        const long long idx = parse_int({idx_text, t.offset}, t.offset);
        const long long resolved = idx < 0 ? static_cast<long long>(verts.size()) + idx : idx - 1;
        if (idx == 0 || resolved < 0 || resolved >= static_cast<long long>(verts.size())) {
          parse_fail(t.offset, "face references undefined vertex " + std::to_string(idx));
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (poly.size() < 3) parse_fail(key.offset, "face with fewer than 3 vertices");
      fan(poly, faces);
    }
    sc.skip_line();
  }
  if (faces.empty()) fail(ErrorCode::kParse, "OBJ contains no faces");
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

TriMesh parse_off(std::string_view data, std::string name, double scale) {
  Scanner sc(data);
  Token header = sc.next();
  if (header.text != "OFF") parse_fail(header.offset, "missing OFF header");
  const long long nv = parse_int(sc.next(), sc.offset());
  const long long nf = parse_int(sc.next(), sc.offset());
  parse_int(sc.next(), sc.offset());
  if (nv < 0 || nf < 0) parse_fail(header.offset, "negative element counts");
  std::vector<Vec3> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    Vec3 v;
    for (int k = 0; k < 3; ++k) v[k] = parse_double(sc.next(), sc.offset());
    verts.push_back(v * scale);
  }
  std::vector<Face> faces;
  for (long long i = 0; i < nf; ++i) {
    const Token count_tok = sc.next();
    const long long count = parse_int(count_tok, sc.offset());
    if (count < 3) parse_fail(count_tok.offset, "face with fewer than 3 vertices");
    std::vector<std::uint32_t> poly;
    for (long long k = 0; k < count; ++k) {
      const Token t = sc.next();
      const long long idx = parse_int(t, sc.offset());
      if (idx < 0 || idx >= nv) parse_fail(t.offset, "face references undefined vertex " + std::to_string(idx));
      poly.push_back(static_cast<std::uint32_t>(idx));
    }
    // Optional per-face colour values run to the end of the line.
    fan(poly, faces);
  }
  if (faces.empty()) fail(ErrorCode::kParse, "OFF contains no faces");
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

TriMesh parse_stl_ascii(std::string_view data, std::string name, double scale) {
  Scanner sc(data);
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  Token t = sc.next();
  if (t.text != "solid") parse_fail(t.offset, "missing 'solid' keyword");
  sc.skip_line();
  for (;;) {
    t = sc.next();
    if (t.text.empty()) parse_fail(sc.offset(), "unexpected end of file (missing 'endsolid')");
    if (t.text == "endsolid") break;
    if (t.text != "facet") parse_fail(t.offset, "expected 'facet'");
    sc.skip_line();  // normal
    t = sc.next();
    if (t.text != "outer") parse_fail(t.text.empty() ? sc.offset() : t.offset, "expected 'outer loop'");
    sc.skip_line();
    const auto base = static_cast<std::uint32_t>(verts.size());
    for (int k = 0; k < 3; ++k) {
      t = sc.next();
      if (t.text != "vertex") parse_fail(t.text.empty() ? sc.offset() : t.offset, "expected 'vertex'");
      Vec3 v;
      for (int c = 0; c < 3; ++c) v[c] = parse_double(sc.next(), sc.offset());
      verts.push_back(v * scale);
    }
    faces.push_back({base, base + 1, base + 2});
    t = sc.next();
    if (t.text != "endloop") parse_fail(t.text.empty() ? sc.offset() : t.offset, "expected 'endloop'");
    t = sc.next();
    if (t.text != "endfacet") parse_fail(t.text.empty() ? sc.offset() : t.offset, "expected 'endfacet'");
  }
  if (faces.empty()) fail(ErrorCode::kParse, "STL contains no facets");
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

TriMesh parse_stl_binary(std::string_view data, std::string name, double scale) {
  if (data.size() < 84) parse_fail(data.size(), "binary STL shorter than its 84-byte header");
  std::uint32_t count = 0;
  std::memcpy(&count, data.data() + 80, 4);  // little-endian host assumed
  const std::size_t needed = 84 + static_cast<std::size_t>(count) * 50;
  if (data.size() < needed) {
    const std::size_t complete = (data.size() - 84) / 50;
    parse_fail(84 + complete * 50, "binary STL truncated: header declares " + std::to_string(count) +
                                       " triangles, file holds " + std::to_string(complete));
  }
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  verts.reserve(count * 3);
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* rec = data.data() + 84 + static_cast<std::size_t>(i) * 50;
    const auto base = static_cast<std::uint32_t>(verts.size());
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 + 12 * k, 12);
      Vec3 v(xyz[0], xyz[1], xyz[2]);
      if (!v.allFinite()) parse_fail(84 + i * 50 + 12 + 12 * k, "non-finite coordinate");
      verts.push_back(v * scale);
    }
    faces.push_back({base, base + 1, base + 2});
  }
  if (faces.empty()) fail(ErrorCode::kParse, "STL contains no facets");
  return TriMesh(std::move(verts), std::move(faces), std::move(name));
}

}  // namespace

std::optional<MeshFormat> mesh_format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return MeshFormat::kObj;
  if (ext == ".stl") return MeshFormat::kStl;
  if (ext == ".off") return MeshFormat::kOff;
  return std::nullopt;
}

TriMesh parse_mesh(std::string_view bytes, MeshFormat format, std::string name, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorCode::kInvalidArgument, "mesh scale must be positive");
  switch (format) {
    case MeshFormat::kObj: return parse_obj(bytes, std::move(name), scale);
    case MeshFormat::kOff: return parse_off(bytes, std::move(name), scale);
    case MeshFormat::kStl: {
      if (bytes.size() >= 84) {
        std::uint32_t count = 0;
        std::memcpy(&count, bytes.data() + 80, 4);
        if (84 + static_cast<std::size_t>(count) * 50 == bytes.size()) {
          return parse_stl_binary(bytes, std::move(name), scale);
        }
      }
      std::size_t i = 0;
      while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
      if (bytes.substr(i, 5) == "solid") return parse_stl_ascii(bytes, std::move(name), scale);
      return parse_stl_binary(bytes, std::move(name), scale);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown mesh format");
}

TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format, double scale) {
  if (!format) format = mesh_format_from_path(path);
  if (!format) fail(ErrorCode::kInvalidArgument, "cannot infer mesh format from " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open mesh file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  try {
    return parse_mesh(bytes, *format, path.stem().string(), scale);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  char line[128];
  if (!mesh.name().empty()) out << "o " << mesh.name() << "\n";
  for (const Vec3& v : mesh.vertices()) {
    std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << line;
  }
  for (const Face& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Geometry

TriMesh transform(const TriMesh& mesh, const Pose& pose) {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertices().size());
  for (const Vec3& v : mesh.vertices()) verts.push_back(pose.apply(v));
  return TriMesh(std::move(verts), mesh.faces(), mesh.name());
}

OrientedBox min_volume_obb(std::span<const Vec3> points) {
  const ConvexHull hull = convex_hull_3d(points);

  std::vector<Vec3> normals;
  for (const auto& f : hull.faces) {
    Vec3 n = (hull.points[f[1]] - hull.points[f[0]]).cross(hull.points[f[2]] - hull.points[f[0]]);
    const double len = n.norm();
    if (!(len > 0.0)) continue;
    n /= len;
    const bool seen = std::any_of(normals.begin(), normals.end(),
                                  [&](const Vec3& m) { return std::abs(m.dot(n)) > 1.0 - 1e-12; });
    if (!seen) normals.push_back(n);
  }

  double best_volume = std::numeric_limits<double>::infinity();
  double best_aspect = std::numeric_limits<double>::infinity();
  Mat3 best_axes = Mat3::Identity();
  std::vector<Vec2> projected(hull.points.size());
  for (const Vec3& n : normals) {
    const Vec3 u = n.unitOrthogonal();
    const Vec3 w = n.cross(u);
    double h_lo = std::numeric_limits<double>::infinity();
    double h_hi = -h_lo;
    for (std::size_t i = 0; i < hull.points.size(); ++i) {
      const Vec3& p = hull.points[i];
      projected[i] = Vec2(p.dot(u), p.dot(w));
      const double h = p.dot(n);
      h_lo = std::min(h_lo, h);
      h_hi = std::max(h_hi, h);
    }
    const Rect2 rect = min_area_rect(convex_hull_2d(projected));
    const double volume = rect.area * (h_hi - h_lo);
    // Equal-volume boxes are common (a wedge has two); keep the least
    // elongated so the aspect ratio does not depend on the input pose.
    const Vec3 sides(rect.hi.x() - rect.lo.x(), rect.hi.y() - rect.lo.y(), h_hi - h_lo);
    const double aspect = sides.maxCoeff() / std::max(sides.minCoeff(), 1e-300);
    const double tol = 1e-9 * volume;
    if (!std::isfinite(best_volume) || volume < best_volume - tol || (volume <= best_volume + tol && aspect < best_aspect - 1e-9)) {
      best_volume = volume;
      best_aspect = aspect;
      const Vec3 a0 = rect.axis_u.x() * u + rect.axis_u.y() * w;
      const Vec3 a1 = n.cross(a0);
      best_axes.col(0) = a0;
      best_axes.col(1) = a1;
      best_axes.col(2) = n;
    }
  }
  // Exact extents along the chosen axes from the hull points.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : hull.points) {
    const Vec3 q = best_axes.transpose() * p;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const Vec3 half = 0.5 * (hi - lo);
  const Vec3 mid = 0.5 * (hi + lo);

  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return half[a] > half[b]; });
  OrientedBox box;
  Mat3 axes;
  for (int k = 0; k < 3; ++k) {
    axes.col(k) = best_axes.col(order[k]);
    box.half_extents[k] = half[order[k]];
  }
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
  box.center = best_axes * mid;
  box.rotation = UnitQuaternion::from_matrix(axes);
  if (!(box.half_extents[2] > 0.0)) fail(ErrorCode::kDegenerate, "bounding box has zero thickness");
  return box;
}

OrientedBox min_volume_obb(const TriMesh& mesh) { return mesh.obb(); }

TriMesh box_mesh(const OrientedBox& box, std::string name) {
  const Mat3 axes = box.axes();
  std::vector<Vec3> verts;
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    verts.push_back(box.center + axes * Vec3(s.x() * box.half_extents[0], s.y() * box.half_extents[1],
                                             s.z() * box.half_extents[2]));
  }
  const std::vector<Face> faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriMesh(std::move(verts), faces, std::move(name));
}

double eccentricity(const TriMesh& mesh) {
  const OrientedBox& box = mesh.obb();
  return box.half_extents[0] / box.half_extents[2] - 1.0;
}

bool contains(const TriMesh& mesh, const Vec3& p) {
  if (!mesh.watertight()) fail(ErrorCode::kNotWatertight, "containment requires a watertight mesh");
  const Aabb& box = mesh.bounds();
  if ((p.array() < box.lo.array()).any() || (p.array() > box.hi.array()).any()) return false;
  const double scale = std::max(box.extent().norm(), 1e-300);
  const double surface_eps = 1e-12 * scale;
  constexpr double kBaryEps = 1e-9;
  bool inside = false;
  for (int attempt = 0; attempt < 16; ++attempt) {
    // Irrational base direction, perturbed on retries.
    Vec3 dir(1.0, std::numbers::sqrt2, std::numbers::pi);
    if (attempt > 0) {
      const double k = attempt;
      dir += 0.9 * Vec3(std::sin(k * std::numbers::e), std::cos(k * std::numbers::phi),
                        std::sin(k * std::numbers::sqrt3 + 1.0));
    }
    dir.normalize();
    int crossings = 0;
    bool ambiguous = false;
    mesh.bvh().all_hits(p, dir, -surface_eps, [&](const RayHit& hit) {
      const double w = 1.0 - hit.u - hit.v;
      if (hit.t <= surface_eps || hit.u < kBaryEps || hit.v < kBaryEps || w < kBaryEps) ambiguous = true;
      ++crossings;
    });
    inside = (crossings % 2) == 1;
    if (!ambiguous) break;
  }
  return inside;
}

PointCloud sample_volume_points(const TriMesh& mesh, std::size_t n, Rng& rng) {
  if (!mesh.watertight()) fail(ErrorCode::kNotWatertight, "volume sampling requires a watertight mesh");
  if (n == 0) fail(ErrorCode::kInvalidArgument, "sample count must be at least 1");
  const OrientedBox& box = mesh.obb();
  const Mat3 axes = box.axes();
  const std::size_t budget = 1000 * n + 100000;
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t attempt = 0; attempt < budget && cloud.size() < n; ++attempt) {
    const Vec3 local(rng.uniform(-1.0, 1.0) * box.half_extents[0], rng.uniform(-1.0, 1.0) * box.half_extents[1],
                     rng.uniform(-1.0, 1.0) * box.half_extents[2]);
    const Vec3 p = box.center + axes * local;
    if (contains(mesh, p)) cloud.points.push_back(p);
  }
  if (cloud.size() < n) {
    fail(ErrorCode::kSampling, "rejection sampling exhausted its budget (" + std::to_string(cloud.size()) + " of " +
                                   std::to_string(n) + " points); mesh too thin?");
  }
  return cloud;
}

TriMesh offset_mesh(const TriMesh& mesh, double distance) {
  if (distance == 0.0) return mesh;
  const auto& verts = mesh.vertices();
  std::vector<std::vector<Vec3>> normals(verts.size());
  for (const Face& f : mesh.faces()) {
    const Vec3 n = (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]).normalized();
    for (std::uint32_t idx : f) {
      auto& list = normals[idx];
      if (std::none_of(list.begin(), list.end(), [&](const Vec3& m) { return m.dot(n) > 1.0 - 1e-9; })) {
        list.push_back(n);
      }
    }
  }
  std::vector<Vec3> moved(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const auto& list = normals[i];
    Eigen::MatrixXd a(list.size(), 3);
    for (std::size_t k = 0; k < list.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = list[k].transpose();
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(list.size()), distance);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Nearly parallel normals (smooth regions) leave small singular values;
    // dropping them yields the plain normal offset there.
    svd.setThreshold(0.15);
    Vec3 shift = svd.solve(b);
    const double limit = 3.0 * std::abs(distance);
    if (shift.norm() > limit) shift *= limit / shift.norm();
    moved[i] = verts[i] + shift;
  }
  return TriMesh(std::move(moved), mesh.faces(), mesh.name());
}

TriMesh recentered(const TriMesh& mesh) {
  return transform(mesh, Pose::from_translation(-mesh.centroid()));
}

}  // namespace kitnet
