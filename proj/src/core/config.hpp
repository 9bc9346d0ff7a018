#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "controller.hpp"
#include "dataset.hpp"
#include "estimator.hpp"

namespace kitnet {

enum class PerturbationMode {
  kRandomAxis,  ///< exactly the cell angle, axis uniform on the sphere
  kOutOfPlane,  ///< exactly the cell angle, axis uniform in the horizontal plane
  kBounded,     ///< uniform on SO(3) restricted to angles below the cell angle
};

const char* perturbation_mode_name(PerturbationMode m);
PerturbationMode parse_perturbation_mode(std::string_view name);

UnitQuaternion sample_perturbation(PerturbationMode mode, double angle_deg, Rng& rng);

struct SuiteSpec {
  /// "procedural" selects the built-in corpus, anything else is a directory.
  std::string corpus = "procedural";
  double mesh_scale = 1.0;
  std::vector<std::string> objects;  ///< empty: every mesh of the corpus
  std::vector<CavityKind> cavity_kinds{CavityKind::kPrismatic};
  std::vector<double> init_angles_deg{30.0, 60.0};
  PerturbationMode perturbation = PerturbationMode::kRandomAxis;
  std::vector<Method> methods{Method::kKitNet};
  int trials = 10;
  std::size_t fit_samples = 10000;
  double success_threshold = 0.95;
  FitMode fit_mode = FitMode::kAuto;
};

struct TrialSpec {
  std::string object = "lbracket_equal";
  CavityKind cavity_kind = CavityKind::kPrismatic;
  double init_angle_deg = 30.0;
  Method method = Method::kKitNet;
  int index = 0;
};

struct DatasetSpec {
  std::size_t pairs_per_mesh = 64;
  Variant variant = Variant::kConformal;
  double mesh_scale = 1.0;
};

/// Declarative run configuration. Holds the fully resolved JSON tree:
/// built-in defaults, overlaid by a user document, overlaid by dotted
/// `set` overrides. Keys that are not in the defaults are rejected, as are
/// values whose JSON type differs from the default's.
class RunConfig {
 public:
  RunConfig();

  static nlohmann::ordered_json defaults();
  static RunConfig from_json(const nlohmann::ordered_json& user);
  static RunConfig from_string(std::string_view text);
  static RunConfig from_file(const std::filesystem::path& path);

  /// `key` is a dotted path such as "controller.eta". `value` is parsed as
  /// JSON; if that fails it is taken as a bare string.
  void set(std::string_view key, std::string_view value);

  /// Resolved tree. The seed is filled in: config value, else KITNET_SEED,
  /// else 0.
  nlohmann::ordered_json resolved() const;

  std::uint64_t seed() const;
  /// 0 means every available core.
  int workers() const;
  SceneConfig scene() const;
  ControllerConfig controller() const;
  EstimatorSpec estimator() const;
  AugmentationConfig augmentation() const;
  DatasetConfig dataset_config() const;
  DatasetSpec dataset() const;
  SuiteSpec suite() const;
  TrialSpec trial() const;
  std::string output_dir() const;

  /// Builds every typed view once so bad values surface as config errors.
  void validate() const;

 private:
  nlohmann::ordered_json tree_;
};

}  // namespace kitnet
