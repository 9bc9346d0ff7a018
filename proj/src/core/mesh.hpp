#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bvh.hpp"
#include "geometry.hpp"

namespace kitnet {

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  /// Sorted descending, all > 0.
  std::array<double, 3> half_extents{};
  /// Columns of rotation.matrix() are the box axes, in half_extents order.
  UnitQuaternion rotation;

  double volume() const { return 8.0 * half_extents[0] * half_extents[1] * half_extents[2]; }
  Mat3 axes() const { return rotation.matrix(); }
  bool contains(const Vec3& p, double tol = 0.0) const;
};

/// Indexed triangle mesh in meters.
///
/// Construction cleans the input: exact duplicate vertices are welded,
/// zero-area faces dropped and unreferenced vertices pruned. A mesh is
/// watertight when every undirected edge is shared by exactly two faces;
/// watertight meshes are re-oriented so the enclosed volume is positive.
/// Immutable once built; the BVH is built eagerly.
class TriMesh {
 public:
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces, std::string name = {});

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::string& name() const { return name_; }
  bool watertight() const { return watertight_; }
  /// Enclosed volume (meaningful for watertight meshes).
  double volume() const { return volume_; }
  /// Volume centroid for watertight meshes, vertex mean otherwise.
  const Vec3& centroid() const { return centroid_; }
  const Aabb& bounds() const { return bvh_->bounds(); }
  const Bvh& bvh() const { return *bvh_; }

  /// Minimum-volume box, computed on first use and cached.
  const OrientedBox& obb() const;

  TriMesh with_name(std::string name) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::string name_;
  bool watertight_ = false;
  double volume_ = 0.0;
  Vec3 centroid_ = Vec3::Zero();
  std::shared_ptr<const Bvh> bvh_;
  struct ObbCache;
  std::shared_ptr<ObbCache> obb_cache_;
};

enum class MeshFormat { kObj, kStl, kOff };

std::optional<MeshFormat> mesh_format_from_path(const std::filesystem::path& path);

/// Loads OBJ, STL (binary or ASCII, auto-detected) or OFF. Coordinates are
/// multiplied by `scale`. Parse errors name the byte offset.
TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt,
                  double scale = 1.0);
TriMesh parse_mesh(std::string_view bytes, MeshFormat format, std::string name = {}, double scale = 1.0);

void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

/// v -> R v + t for every vertex; topology unchanged.
TriMesh transform(const TriMesh& mesh, const Pose& pose);

/// Approximate minimum-volume oriented bounding box: for every distinct
/// convex-hull face normal, the minimum-area rectangle of the hull projected
/// onto that face plane. Throws kDegenerate for planar or collinear input.
OrientedBox min_volume_obb(std::span<const Vec3> points);
OrientedBox min_volume_obb(const TriMesh& mesh);

TriMesh box_mesh(const OrientedBox& box, std::string name = "box");

/// Longest over shortest side of the minimum-volume box, minus one.
double eccentricity(const TriMesh& mesh);

/// Ray-parity point containment through the mesh BVH. Rays leave along a
/// fixed irrational direction; a ray that grazes an edge, vertex or the
/// point itself is re-cast along a perturbed direction.
/// Throws kNotWatertight.
bool contains(const TriMesh& mesh, const Vec3& p);

/// n points uniform over the enclosed volume by rejection sampling from the
/// minimum-volume box. Throws kNotWatertight, kInvalidArgument for n = 0, and
/// kSampling when the attempt budget (1000 * n + 100000) runs out.
PointCloud sample_volume_points(const TriMesh& mesh, std::size_t n, Rng& rng);

/// Moves every vertex so each incident face plane shifts outward by
/// `distance` (least-squares miter over the distinct incident normals).
TriMesh offset_mesh(const TriMesh& mesh, double distance);

/// Translates the mesh so its centroid sits at the origin.
TriMesh recentered(const TriMesh& mesh);

}  // namespace kitnet
