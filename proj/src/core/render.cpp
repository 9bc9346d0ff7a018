#include "render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

#include "error.hpp"

namespace kitnet {

CameraModel CameraModel::overhead(int width, int height, double vfov_deg, double height_m) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fy = 0.5 * height / std::tan(0.5 * deg2rad(vfov_deg));
  cam.fx = cam.fy;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.pose = Pose::from_translation(Vec3(0.0, 0.0, height_m));
  cam.validate();
  return cam;
}

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "camera raster must be non-empty");
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::kInvalidArgument, "camera focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    fail(ErrorCode::kInvalidArgument, "camera principal point outside the raster");
  }
  if (!pose.translation.allFinite()) fail(ErrorCode::kInvalidArgument, "camera pose must be finite");
}

Vec3 CameraModel::ray_direction(double u, double v) const {
  return kitnet::apply(pose.rotation, Vec3((u - cx) / fx, -(v - cy) / fy, -1.0));
}

DepthImage::DepthImage(int width, int height)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, 0.0f) {
  if (width < 0 || height < 0) fail(ErrorCode::kInvalidArgument, "negative image size");
}

DepthImage::DepthImage(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 || data_.size() != static_cast<std::size_t>(width) * height) {
    fail(ErrorCode::kInvalidArgument, "depth data does not match image size");
  }
  for (float d : data_) {
    if (!std::isfinite(d) || d < 0.0f) fail(ErrorCode::kInvalidArgument, "depth values must be finite and >= 0");
  }
}

std::size_t DepthImage::foreground_count() const {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](float d) { return d > 0.0f; }));
}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

struct LocalRay {
  Vec3 origin;
  Vec3 dir;
};

LocalRay to_local(const Pose& pose, const Vec3& origin, const Vec3& dir) {
  const UnitQuaternion inv = inverse(pose.rotation);
  return {apply(inv, origin - pose.translation), apply(inv, dir)};
}

double trace(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (const ScenePart& part : scene.solids) {
    const LocalRay r = to_local(part.pose, origin, dir);
    if (auto hit = part.mesh->bvh().closest_hit(r.origin, r.dir, 0.0, best)) best = hit->t;
  }
  if (scene.ground_z && dir.z() < 0.0) {
    const double t_plane = (*scene.ground_z - origin.z()) / dir.z();
    if (t_plane > 0.0 && t_plane < best) {
      double visible = t_plane;
      for (const ScenePart& part : scene.voids) {
        const LocalRay r = to_local(part.pose, origin, dir);
        const Vec3 entry = r.origin + t_plane * r.dir;
        if (!contains(*part.mesh, entry)) continue;
        // Inside the void at the plane: the visible surface is where the
        // ray leaves the void.
        if (auto exit = part.mesh->bvh().closest_hit(r.origin, r.dir, t_plane)) {
          visible = std::max(visible, exit->t);
        }
      }
      best = std::min(best, visible);
    }
  }
  return best;
}

}  // namespace

DepthImage render_scene(const Scene& scene, const CameraModel& camera, RenderStats* stats) {
  camera.validate();
  DepthImage image(camera.width, camera.height);
  const Vec3 origin = camera.origin();
  std::size_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const double t = trace(scene, origin, camera.ray_direction(u, v));
      if (std::isfinite(t) && t > 0.0) {
        image.set(u, v, static_cast<float>(t));
        ++hits;
      }
    }
  }
  if (stats) {
    stats->hit_pixels = hits;
    stats->warnings = hits == 0 ? 1 : 0;
  }
  return image;
}

DepthImage render_depth(const TriMesh& mesh, const Pose& pose, const CameraModel& camera, RenderStats* stats) {
  Scene scene;
  scene.solids.push_back({&mesh, pose});
  return render_scene(scene, camera, stats);
}

PointCloud deproject(const DepthImage& image, const CameraModel& camera, const PixelMask* mask) {
  if (image.width() != camera.width || image.height() != camera.height) {
    fail(ErrorCode::kSizeMismatch, "image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                       " but camera expects " + std::to_string(camera.width) + "x" +
                                       std::to_string(camera.height));
  }
  if (mask && (mask->width != image.width() || mask->height != image.height())) {
    fail(ErrorCode::kSizeMismatch, "mask size does not match image");
  }
  PointCloud cloud;
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const double d = image.at(u, v);
      if (d <= 0.0) continue;
      if (mask && !mask->at(u, v)) continue;
      const Vec3 p_cam((u - camera.cx) / camera.fx * d, -(v - camera.cy) / camera.fy * d, -d);
      cloud.points.push_back(camera.pose.apply(p_cam));
    }
  }
  return cloud;
}

OrientedCloud deproject_oriented(const DepthImage& image, const CameraModel& camera, double max_jump) {
  if (image.width() != camera.width || image.height() != camera.height) {
    fail(ErrorCode::kSizeMismatch, "image size does not match the camera");
  }
  auto point = [&](int u, int v) {
    const double d = image.at(u, v);
    return camera.pose.apply(Vec3((u - camera.cx) / camera.fx * d, -(v - camera.cy) / camera.fy * d, -d));
  };
  auto usable = [&](int u, int v, float d0) {
    if (u < 0 || v < 0 || u >= image.width() || v >= image.height()) return false;
    const float d = image.at(u, v);
    return d > 0.0f && std::abs(d - d0) < max_jump;
  };
  const Vec3 eye = camera.origin();
  OrientedCloud out;
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const float d0 = image.at(u, v);
      if (d0 <= 0.0f) continue;
      const bool l = usable(u - 1, v, d0), r = usable(u + 1, v, d0);
      const bool t = usable(u, v - 1, d0), b = usable(u, v + 1, d0);
      if (!(l || r) || !(t || b)) continue;
      const Vec3 du = point(r ? u + 1 : u, v) - point(l ? u - 1 : u, v);
      const Vec3 dv = point(u, b ? v + 1 : v) - point(u, t ? v - 1 : v);
      Vec3 n = du.cross(dv);
      if (n.squaredNorm() == 0.0) continue;
      n.normalize();
      const Vec3 p = point(u, v);
      if (n.dot(eye - p) < 0.0) n = -n;
      out.points.push_back(p);
      out.normals.push_back(n);
    }
  }
  return out;
}

PixelMask segment_workspace(const DepthImage& image, double plane_depth, double slack) {
  PixelMask mask{image.width(), image.height(), std::vector<std::uint8_t>(image.data().size(), 0)};
  for (std::size_t i = 0; i < image.data().size(); ++i) {
    const double d = image.data()[i];
    if (d > 0.0 && std::abs(d - plane_depth) > slack) mask.bits[i] = 1;
  }
  return mask;
}

DepthImage apply_mask(const DepthImage& image, const PixelMask& mask) {
  if (mask.width != image.width() || mask.height != image.height()) {
    fail(ErrorCode::kSizeMismatch, "mask size does not match image");
  }
  DepthImage out(image.width(), image.height());
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      if (mask.at(u, v)) out.set(u, v, image.at(u, v));
    }
  }
  return out;
}

DepthImage project_points(const PointCloud& cloud, const CameraModel& camera) {
  camera.validate();
  DepthImage image(camera.width, camera.height);
  const Pose world_to_cam = camera.pose.inverse();
  for (const Vec3& p : cloud.points) {
    const Vec3 c = world_to_cam.apply(p);
    const double depth = -c.z();
    if (!(depth > 0.0)) continue;
    const long u = std::lround(camera.cx + camera.fx * c.x() / depth);
    const long v = std::lround(camera.cy - camera.fy * c.y() / depth);
    if (u < 0 || v < 0 || u >= camera.width || v >= camera.height) continue;
    const float current = image.at(static_cast<int>(u), static_cast<int>(v));
    if (current == 0.0f || depth < current) image.set(static_cast<int>(u), static_cast<int>(v), static_cast<float>(depth));
  }
  DepthImage filled = image;
  for (int v = 1; v + 1 < image.height(); ++v) {
    for (int u = 1; u + 1 < image.width(); ++u) {
      if (image.at(u, v) > 0.0f) continue;
      int n = 0;
      double sum = 0.0;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const float d = image.at(u + du, v + dv);
          if (d > 0.0f) ++n, sum += d;
        }
      }
      if (n >= 6) filled.set(u, v, static_cast<float>(sum / n));
    }
  }
  return filled;
}

PixelBox foreground_bounds(const DepthImage& image) {
  PixelBox box{image.width(), image.height(), -1, -1};
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      if (image.at(u, v) <= 0.0f) continue;
      box.u_min = std::min(box.u_min, u);
      box.v_min = std::min(box.v_min, v);
      box.u_max = std::max(box.u_max, u);
      box.v_max = std::max(box.v_max, v);
    }
  }
  if (box.u_max < 0) return PixelBox{};
  return box;
}

Vec2 foreground_centroid(const DepthImage& image) {
  Vec2 sum = Vec2::Zero();
  std::size_t n = 0;
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      if (image.at(u, v) > 0.0f) sum += Vec2(u, v), ++n;
    }
  }
  if (n == 0) fail(ErrorCode::kEmptyForeground, "image has no foreground pixels");
  return sum / static_cast<double>(n);
}

DepthImage crop_and_resize(const DepthImage& image, const Vec2& center, double margin_fraction, int out_size) {
  if (out_size <= 0) fail(ErrorCode::kInvalidArgument, "crop output size must be positive");
  if (!(margin_fraction >= 0.0)) fail(ErrorCode::kInvalidArgument, "crop margin must be non-negative");
  const PixelBox fg = foreground_bounds(image);
  if (fg.empty()) fail(ErrorCode::kEmptyForeground, "cannot crop an image without foreground");
  const double extent = std::max(fg.u_max - fg.u_min + 1, fg.v_max - fg.v_min + 1);
  const double side = extent * (1.0 + margin_fraction);
  // Pixel k covers [k - 0.5, k + 0.5].
  const double x0 = center.x() - 0.5 * side;
  const double y0 = center.y() - 0.5 * side;
  if (x0 + side <= -0.5 || y0 + side <= -0.5 || x0 >= image.width() - 0.5 || y0 >= image.height() - 0.5) {
    fail(ErrorCode::kInvalidArgument, "crop window does not intersect the raster");
  }
  const double step = side / out_size;
  DepthImage out(out_size, out_size);
  for (int j = 0; j < out_size; ++j) {
    for (int i = 0; i < out_size; ++i) {
      const double x = x0 + (i + 0.5) * step;
      const double y = y0 + (j + 0.5) * step;
      const int u0 = static_cast<int>(std::floor(x));
      const int v0 = static_cast<int>(std::floor(y));
      const double fx = x - u0;
      const double fy = y - v0;
      double weight = 0.0;
      double sum = 0.0;
      for (int dv = 0; dv <= 1; ++dv) {
        for (int du = 0; du <= 1; ++du) {
          const int u = u0 + du;
          const int v = v0 + dv;
          const double w = (du ? fx : 1.0 - fx) * (dv ? fy : 1.0 - fy);
          if (u < 0 || v < 0 || u >= image.width() || v >= image.height()) continue;
          const float d = image.at(u, v);
          if (d <= 0.0f || w <= 0.0) continue;
          weight += w;
          sum += w * d;
        }
      }
      if (weight >= 0.5) out.set(i, j, static_cast<float>(sum / weight));
    }
  }
  return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return v;
}

}  // namespace

std::string encode_kndi(const DepthImage& image) {
  std::string out = "KNDI";
  put_u32(out, static_cast<std::uint32_t>(image.width()));
  put_u32(out, static_cast<std::uint32_t>(image.height()));
  put_u32(out, 0);
  out.reserve(16 + image.data().size() * 4);
  for (float d : image.data()) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &d, 4);
    put_u32(out, bits);
  }
  return out;
}

DepthImage decode_kndi(std::string_view bytes) {
  if (bytes.size() < 16) fail(ErrorCode::kParse, "KNDI file shorter than its 16-byte header");
  if (bytes.substr(0, 4) != "KNDI") fail(ErrorCode::kParse, "bad KNDI magic");
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::size_t expected = 16 + static_cast<std::size_t>(w) * h * 4;
  if (bytes.size() != expected) {
    fail(ErrorCode::kParse, "KNDI payload is " + std::to_string(bytes.size() - 16) + " bytes, header implies " +
                                std::to_string(expected - 16));
  }
  std::vector<float> data(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint32_t bits = get_u32(bytes, 16 + 4 * i);
    std::memcpy(&data[i], &bits, 4);
  }
  return DepthImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

void write_kndi(const DepthImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  const std::string bytes = encode_kndi(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

DepthImage read_kndi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_kndi(buf.str());
}

void write_png16(const DepthImage& image, const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) fail(ErrorCode::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::kIo, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * 2);
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const double mm = std::round(static_cast<double>(image.at(u, v)) * 1000.0);
      const auto q = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
      row[2 * u] = static_cast<png_byte>(q >> 8);  // PNG samples are big-endian
      row[2 * u + 1] = static_cast<png_byte>(q & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace kitnet
