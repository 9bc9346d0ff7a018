#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "hull.hpp"
#include "mesh.hpp"

namespace kitnet {

/// Pinhole camera. `pose` maps camera coordinates to world coordinates; the
/// camera looks along its own -z axis with +x to the right of the image and
/// +y up. Pixel (u, v) has its centre at integer coordinates, v grows down.
struct CameraModel {
  int width = 128;
  int height = 128;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  Pose pose;

  /// Square pixels, principal point at (width/2, height/2), camera
  /// `height_m` above the world origin looking straight down (-z).
  static CameraModel overhead(int width, int height, double vfov_deg, double height_m);

  void validate() const;
  /// World-frame ray direction whose optical-axis component has unit length.
  Vec3 ray_direction(double u, double v) const;
  Vec3 origin() const { return pose.translation; }
  /// Metric width of one pixel at the given depth.
  double pixel_footprint(double depth) const { return depth / fx; }
};

/// Row-major float32 raster of z-depth in meters; 0 marks background.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height);
  /// Throws kInvalidArgument on a size mismatch or negative/non-finite data.
  DepthImage(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int u, int v) const { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  void set(int u, int v, float depth) { data_[static_cast<std::size_t>(v) * width_ + u] = depth; }
  const std::vector<float>& data() const { return data_; }
  std::size_t foreground_count() const;

  bool operator==(const DepthImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  std::size_t count() const;
};

struct RenderStats {
  std::size_t hit_pixels = 0;
  /// 1 when nothing in the scene is visible.
  int warnings = 0;
};

struct ScenePart {
  const TriMesh* mesh = nullptr;
  Pose pose;
};

/// Solid parts, an optional horizontal ground plane at world height
/// `ground_z`, and voids carved into the ground below that plane.
struct Scene {
  std::vector<ScenePart> solids;
  std::optional<double> ground_z;
  std::vector<ScenePart> voids;
};

DepthImage render_depth(const TriMesh& mesh, const Pose& pose, const CameraModel& camera,
                        RenderStats* stats = nullptr);
DepthImage render_scene(const Scene& scene, const CameraModel& camera, RenderStats* stats = nullptr);

/// Pinhole inverse for every non-zero (and mask-selected) pixel.
PointCloud deproject(const DepthImage& image, const CameraModel& camera, const PixelMask* mask = nullptr);

/// Deprojected points with unit surface normals facing the camera,
/// estimated from neighbouring pixels on the same surface (depth jump below
/// `max_jump`). Pixels without usable neighbours are dropped.
struct OrientedCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};
OrientedCloud deproject_oriented(const DepthImage& image, const CameraModel& camera, double max_jump = 0.02);

/// Pixels that are non-zero and differ from `plane_depth` by more than `slack`.
PixelMask segment_workspace(const DepthImage& image, double plane_depth, double slack);

DepthImage apply_mask(const DepthImage& image, const PixelMask& mask);

/// Z-buffered projection of world points onto the camera raster. Single
/// pixel holes surrounded by at least six foreground neighbours are filled
/// with the neighbour mean.
DepthImage project_points(const PointCloud& cloud, const CameraModel& camera);

struct PixelBox {
  int u_min = 0, v_min = 0, u_max = -1, v_max = -1;
  bool empty() const { return u_max < u_min; }
};
PixelBox foreground_bounds(const DepthImage& image);
/// Mean pixel coordinate of the foreground.
Vec2 foreground_centroid(const DepthImage& image);

/// Square crop of side extent * (1 + margin_fraction) around `center`, where
/// extent is the larger side of the foreground bounding box, resampled to
/// out_size x out_size. Bilinear weights skip background pixels and are
/// renormalized; samples with less than half their weight on foreground stay
/// background. Throws kEmptyForeground and, for a window entirely off the
/// raster, kInvalidArgument.
DepthImage crop_and_resize(const DepthImage& image, const Vec2& center, double margin_fraction, int out_size);

// KNDI raster: "KNDI", u32 width, u32 height, u32 reserved, then
// width*height float32, all little-endian.
std::string encode_kndi(const DepthImage& image);
DepthImage decode_kndi(std::string_view bytes);
void write_kndi(const DepthImage& image, const std::filesystem::path& path);
DepthImage read_kndi(const std::filesystem::path& path);

/// 16-bit grayscale PNG, depth quantized to millimeters (saturating).
void write_png16(const DepthImage& image, const std::filesystem::path& path);

}  // namespace kitnet
