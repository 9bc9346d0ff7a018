#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "error.hpp"

namespace kitnet {

const char* variant_name(Variant v) { return v == Variant::kConformal ? "conformal" : "prismatic"; }

Variant parse_variant(std::string_view name) {
  if (name == "conformal") return Variant::kConformal;
  if (name == "prismatic") return Variant::kPrismatic;
  fail(ErrorCode::kConfig, "unknown dataset variant '" + std::string(name) + "'");
}

void AugmentationConfig::validate() const {
  auto fraction = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kConfig, std::string(what) + " must be in [0, 1]");
  };
  fraction(pixel_dropout_fraction, "pixel_dropout_fraction");
  fraction(cut_width_fraction, "cut_width_fraction");
  fraction(cut_height_min, "cut_height_min");
  fraction(cut_height_max, "cut_height_max");
  if (cut_height_min > cut_height_max) fail(ErrorCode::kConfig, "cut_height_min exceeds cut_height_max");
  if (cut_count < 0) fail(ErrorCode::kConfig, "cut_count must be >= 0");
  if (!(translation_range >= 0.0)) fail(ErrorCode::kConfig, "translation_range must be >= 0");
  if (!(crop_margin_min >= 0.0 && crop_margin_min <= crop_margin_max)) {
    fail(ErrorCode::kConfig, "crop margins must satisfy 0 <= min <= max");
  }
  if (!(crop_center_offset >= 0.0)) fail(ErrorCode::kConfig, "crop_center_offset must be >= 0");
}

AugmentationConfig AugmentationConfig::none() {
  AugmentationConfig a;
  a.enabled = false;
  a.pixel_dropout_fraction = 0.0;
  a.cut_count = 0;
  a.translation_range = 0.0;
  a.crop = false;
  return a;
}

Pose centroid_pose(const TriMesh& mesh, const UnitQuaternion& rotation, const Vec3& position) {
  return {rotation, position - apply(rotation, mesh.centroid())};
}

DepthImage augment(const DepthImage& image, const AugmentationConfig& aug, Rng& rng) {
  if (!aug.enabled) return image;
  aug.validate();
  DepthImage out = image;
  if (aug.crop) {
    const Vec2 center = foreground_centroid(image) + Vec2(rng.uniform(-aug.crop_center_offset, aug.crop_center_offset),
                                                          rng.uniform(-aug.crop_center_offset, aug.crop_center_offset));
    const double margin = rng.uniform(aug.crop_margin_min, aug.crop_margin_max);
    const DepthImage square = crop_and_resize(image, center, margin, image.width());
    if (square.height() == image.height()) {
      out = square;
    } else {
      // Non-square raster: keep the top rows of the square resample.
      out = DepthImage(image.width(), image.height());
      for (int v = 0; v < std::min(image.height(), square.height()); ++v) {
        for (int u = 0; u < image.width(); ++u) out.set(u, v, square.at(u, v));
      }
    }
  }
  if (aug.pixel_dropout_fraction > 0.0) {
    for (int v = 0; v < out.height(); ++v) {
      for (int u = 0; u < out.width(); ++u) {
        if (rng.uniform() < aug.pixel_dropout_fraction) out.set(u, v, 0.0f);
      }
    }
  }
  const int w = out.width();
  const int h = out.height();
  for (int c = 0; c < aug.cut_count; ++c) {
    const int cw = std::clamp(static_cast<int>(std::lround(aug.cut_width_fraction * w)), 0, w);
    const int ch =
        std::clamp(static_cast<int>(std::lround(rng.uniform(aug.cut_height_min, aug.cut_height_max) * h)), 0, h);
    const auto u0 = static_cast<int>(rng.uniform_int(0, w - cw));
    const auto v0 = static_cast<int>(rng.uniform_int(0, h - ch));
    for (int v = v0; v < v0 + ch; ++v) {
      for (int u = u0; u < u0 + cw; ++u) out.set(u, v, 0.0f);
    }
  }
  return out;
}

namespace {

Vec3 draw_translation(const AugmentationConfig& aug, Rng& rng) {
  if (!aug.enabled || aug.translation_range == 0.0) return Vec3::Zero();
  const double r = aug.translation_range;
  return Vec3(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r));
}

DepthImage render_view(const TriMesh& mesh, const UnitQuaternion& rotation, const Vec3& position, Variant variant,
                       const CameraModel& camera) {
  const Pose pose = centroid_pose(mesh, rotation, position);
  RenderStats stats;
  DepthImage img;
  if (variant == Variant::kConformal) {
    img = render_depth(mesh, pose, camera, &stats);
  } else {
    const OrientedBox& local = mesh.obb();
    const TriMesh box = box_mesh(OrientedBox{Vec3::Zero(), local.half_extents, local.rotation}, "obb");
    img = render_depth(box, compose(pose, Pose{UnitQuaternion::identity(), local.center}), camera, &stats);
  }
  if (stats.hit_pixels == 0) {
    fail(ErrorCode::kEmptyForeground, "render of '" + mesh.name() + "' produced an empty foreground");
  }
  return img;
}

}  // namespace

RotationPairRecord generate_pair(const TriMesh& mesh, const DatasetConfig& config, Variant variant, Rng& rng,
                                 const std::optional<UnitQuaternion>& forced_relative) {
  config.camera.validate();
  RotationPairRecord rec;
  rec.mesh_id = mesh.name();
  rec.variant = variant;
  rec.rotation_start = sample_uniform(rng);
  const UnitQuaternion relative =
      forced_relative ? *forced_relative : sample_bounded(rng, deg2rad(config.max_relative_angle_deg));
  rec.rotation_goal = compose(relative, rec.rotation_start).canonical();
  rec.label = compose(rec.rotation_goal, inverse(rec.rotation_start)).canonical();
  rec.translation_start = draw_translation(config.aug, rng);
  rec.translation_goal = draw_translation(config.aug, rng);
  // I^s always shows the object; I^g shows the object or its prismatic box.
  rec.image_start = render_view(mesh, rec.rotation_start, config.object_position + rec.translation_start,
                                Variant::kConformal, config.camera);
  rec.image_goal =
      render_view(mesh, rec.rotation_goal, config.object_position + rec.translation_goal, variant, config.camera);
  rec.image_start = augment(rec.image_start, config.aug, rng);
  rec.image_goal = augment(rec.image_goal, config.aug, rng);
  return rec;
}

std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& corpus_dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(corpus_dir, ec)) fail(ErrorCode::kNotFound, "corpus not found: " + corpus_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
    if (entry.is_regular_file() && mesh_format_from_path(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::kIo, "corpus has no .obj/.stl/.off meshes: " + corpus_dir.string());
  return files;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kInternal, "SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

struct MeshShard {
  std::string mesh_id;
  std::string index;
  std::string digest_input;
};

MeshShard write_mesh_shard(const TriMesh& mesh, std::size_t pairs, Variant variant, const DatasetConfig& config,
                           const std::filesystem::path& dir, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  MeshShard shard{mesh.name(), {}, {}};
  for (std::size_t i = 0; i < pairs; ++i) {
    Rng rng(derive_seed(seed, mesh.name(), i));
    const RotationPairRecord rec = generate_pair(mesh, config, variant, rng);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%04zu", i);
    const std::string s_bytes = encode_kndi(rec.image_start);
    const std::string g_bytes = encode_kndi(rec.image_goal);
    write_bytes(dir / (std::string(stem) + "_s.kndi"), s_bytes);
    write_bytes(dir / (std::string(stem) + "_g.kndi"), g_bytes);
    nlohmann::ordered_json line;
    line["record_id"] = i;
    line["mesh_id"] = rec.mesh_id;
    line["variant"] = variant_name(variant);
    line["quat_wxyz"] = rec.label.wxyz();
    line["angle_deg"] = rad2deg(rec.label.angle());
    shard.index += line.dump() + "\n";
    shard.digest_input += sha256_hex(s_bytes) + sha256_hex(g_bytes);
  }
  write_bytes(dir / "index.jsonl", shard.index);
  return shard;
}

}  // namespace

nlohmann::ordered_json generate_dataset(const std::filesystem::path& corpus_dir, std::size_t pairs_per_mesh,
                                        Variant variant, const DatasetConfig& config,
                                        const std::filesystem::path& out_dir, std::uint64_t seed,
                                        const nlohmann::ordered_json& config_echo, double mesh_scale) {
  config.aug.validate();
  const auto files = list_corpus(corpus_dir);
  std::vector<TriMesh> meshes;
  meshes.reserve(files.size());
  for (const auto& f : files) meshes.push_back(load_mesh(f, std::nullopt, mesh_scale).with_name(f.stem().string()));

  std::vector<MeshShard> shards(meshes.size());
  std::vector<std::exception_ptr> errors(meshes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    try {
      shards[m] = write_mesh_shard(meshes[m], pairs_per_mesh, variant, config, out_dir / meshes[m].name(), seed);
    } catch (...) {
      errors[m] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  nlohmann::ordered_json manifest;
  manifest["format"] = "kitnet-rotation-pairs";
  manifest["format_version"] = 1;
  manifest["seed"] = seed;
  manifest["variant"] = variant_name(variant);
  manifest["pairs_per_mesh"] = pairs_per_mesh;
  manifest["config"] = config_echo;
  nlohmann::ordered_json per_mesh = nlohmann::ordered_json::array();
  std::string digest;
  for (const MeshShard& s : shards) {
    per_mesh.push_back({{"mesh_id", s.mesh_id}, {"records", pairs_per_mesh}});
    digest += s.mesh_id + "\n" + s.index + s.digest_input;
  }
  manifest["meshes"] = per_mesh;
  manifest["total_records"] = pairs_per_mesh * shards.size();
  manifest["hash"] = sha256_hex(manifest.dump() + digest);
  write_bytes(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace kitnet
