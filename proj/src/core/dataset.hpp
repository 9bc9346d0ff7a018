#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mesh.hpp"
#include "render.hpp"

namespace kitnet {

enum class Variant { kConformal, kPrismatic };
const char* variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct AugmentationConfig {
  bool enabled = true;
  double pixel_dropout_fraction = 0.01;
  double cut_width_fraction = 0.30;  ///< of the image width
  double cut_height_min = 0.10;      ///< of the image height
  double cut_height_max = 0.30;
  int cut_count = 1;
  double translation_range = 0.05;  ///< meters, ± per axis
  bool crop = true;
  double crop_margin_min = 0.05;
  double crop_margin_max = 0.25;
  double crop_center_offset = 5.0;  ///< pixels, ± per axis

  void validate() const;
  /// Everything off: images are plain renders.
  static AugmentationConfig none();
};

struct DatasetConfig {
  CameraModel camera = CameraModel::overhead(128, 128, 45.0, 0.8);
  /// Nominal object centroid position for rendering.
  Vec3 object_position = Vec3(0.0, 0.0, 0.35);
  double max_relative_angle_deg = 30.0;
  AugmentationConfig aug;
};

struct RotationPairRecord {
  DepthImage image_start;
  DepthImage image_goal;
  /// R^g ∘ (R^s)⁻¹, canonical.
  UnitQuaternion label;
  std::string mesh_id;
  Variant variant = Variant::kConformal;
  // Generation metadata, not serialized into the shard index.
  UnitQuaternion rotation_start;
  UnitQuaternion rotation_goal;
  Vec3 translation_start = Vec3::Zero();
  Vec3 translation_goal = Vec3::Zero();
};

/// Pose that puts the mesh's centroid at `position`, rotated by `rotation`
/// about that centroid.
Pose centroid_pose(const TriMesh& mesh, const UnitQuaternion& rotation, const Vec3& position);

/// Crop (when enabled), then pixel dropout, then rectangular cuts.
DepthImage augment(const DepthImage& image, const AugmentationConfig& aug, Rng& rng);

/// R^s uniform on SO(3), R^g = bounded ∘ R^s. When `forced_relative` is set
/// it replaces the bounded draw.
RotationPairRecord generate_pair(const TriMesh& mesh, const DatasetConfig& config, Variant variant, Rng& rng,
                                 const std::optional<UnitQuaternion>& forced_relative = std::nullopt);

/// Meshes (*.obj, *.stl, *.off) of a corpus directory, sorted by file name.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& corpus_dir);

/// Writes <out>/<mesh_id>/NNNN_s.kndi, NNNN_g.kndi and index.jsonl for each
/// mesh plus <out>/manifest.json, and returns the manifest. The stream of
/// mesh m record i is seeded from (seed, m, i). `config_echo` is stored
/// verbatim in the manifest.
nlohmann::ordered_json generate_dataset(const std::filesystem::path& corpus_dir, std::size_t pairs_per_mesh,
                                        Variant variant, const DatasetConfig& config,
                                        const std::filesystem::path& out_dir, std::uint64_t seed,
                                        const nlohmann::ordered_json& config_echo = nlohmann::ordered_json::object(),
                                        double mesh_scale = 1.0);

std::string sha256_hex(std::string_view bytes);

}  // namespace kitnet
