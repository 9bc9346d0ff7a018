#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "eval.hpp"
#include "mesh.hpp"
#include "render.hpp"

namespace kitnet {

struct ControllerConfig {
  double eta = 0.8;
  double delta_deg = 5.0;
  int max_iters = 8;

  /// eta 0.2, delta 0.5°, 50 iterations.
  static ControllerConfig legacy();
  void validate() const;
};

enum class CavityKind { kPrismatic, kConvexConformal, kConcaveConformal };
const char* cavity_kind_name(CavityKind kind);
/// "prismatic", "convex_conformal", "concave_conformal".
CavityKind parse_cavity_kind(std::string_view name);

enum class Termination { kThreshold, kIterLimit, kError };
const char* termination_name(Termination t);

enum class Method { kKitNet, kBaseline2d, kBaselineRandom };
const char* method_name(Method m);
Method parse_method(std::string_view name);

/// How the final percent fit is evaluated. kRotationOnly places the object
/// centroid at its goal position with the final orientation; kFinalPose
/// uses the translation found by centroid matching. kAuto is rotation-only
/// for prismatic cavities and final pose otherwise.
enum class FitMode { kAuto, kFinalPose, kRotationOnly };
const char* fit_mode_name(FitMode m);
FitMode parse_fit_mode(std::string_view name);

/// World layout of a kitting scene. The camera is expected to look straight
/// down at the horizontal workspace plane.
struct SceneConfig {
  CameraModel camera = CameraModel::overhead(128, 128, 45.0, 0.8);
  double plane_z = 0.0;
  /// Object centroid while it is held and rotated.
  Vec3 hold_position = Vec3(0.0, 0.0, 0.35);
  /// Horizontal position of the cavity's goal centroid.
  Vec2 cavity_xy = Vec2(0.06, -0.04);
  /// Pixels within this distance of the plane depth are background.
  double segment_slack = 0.002;
  /// Outward offset of conformal cavities relative to the object surface.
  double conformal_clearance = 0.004;

  double plane_depth() const { return camera.pose.translation.z() - plane_z; }
  void validate() const;
};

struct Cavity {
  std::shared_ptr<const TriMesh> mesh;
  Pose pose;
  /// Object pose that fits the cavity exactly.
  UnitQuaternion goal_rotation;
  Vec3 goal_centroid = Vec3::Zero();
  /// Carved into the plane rather than standing on it.
  bool is_void = false;
};

/// Prismatic: the object's minimum-volume box at the goal orientation.
/// Convex conformal: the object offset outward by conformal_clearance,
/// standing on the plane. Concave conformal: the same offset shape carved
/// into the plane down to the object centroid, which sits at plane height.
Cavity build_cavity(const TriMesh& object, CavityKind kind, const UnitQuaternion& goal_rotation,
                    const SceneConfig& scene);

/// Overhead depth image of the cavity on the workspace plane.
DepthImage render_cavity(const Cavity& cavity, const SceneConfig& scene);

struct ConcaveGoal {
  DepthImage image;
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  bool fallback_axis = false;
};

/// Segments the cavity pixels, deprojects them, turns the cloud 180° about
/// the horizontal principal axis through its centroid and reprojects it with
/// z-buffering. An isotropic footprint falls back to the camera x-axis.
ConcaveGoal synthesize_concave_goal(const DepthImage& image_cavity, const CameraModel& camera, double plane_depth,
                                    double slack);

/// Horizontal centroid offset from the segmented object cloud to the
/// segmented cavity cloud; z is set to `drop`.
Vec3 translation_step(const DepthImage& image_object, const DepthImage& image_cavity, const CameraModel& camera,
                      double plane_depth, double slack, double drop);

struct StepRecord {
  int iteration = 0;
  UnitQuaternion estimate;
  UnitQuaternion applied;  ///< identity on the terminating step
  double residual_true_angle_deg = 0.0;  ///< before `applied`
};

struct LoopResult {
  std::vector<StepRecord> steps;
  Termination terminated_by = Termination::kIterLimit;
  UnitQuaternion final_rotation;
  std::string error;
};

/// Observe, estimate, stop below delta, otherwise apply slerp(I, estimate,
/// eta) about the centroid; at most max_iters estimates. Estimator failures
/// end the loop with kError and a message.
LoopResult rotation_loop(const UnitQuaternion& start, const UnitQuaternion& target,
                         const std::function<DepthImage(const UnitQuaternion&)>& observe, const DepthImage& goal_image,
                         RotationEstimator& estimator, const ControllerConfig& config);

struct KittingTrial {
  std::shared_ptr<const TriMesh> object;
  CavityKind cavity_kind = CavityKind::kPrismatic;
  /// Orientation of the object inside the cavity.
  UnitQuaternion goal_rotation;
  /// The object starts at initial_perturbation ∘ (estimator target).
  UnitQuaternion initial_perturbation;
  Method method = Method::kKitNet;
  EstimatorSpec estimator;
  ControllerConfig config;
  SceneConfig scene;
  std::uint64_t seed = 0;
  std::size_t fit_samples = 10000;
  double success_threshold = 0.95;
  FitMode fit_mode = FitMode::kAuto;
  /// Replaces the cavity build_cavity would produce.
  std::optional<Cavity> cavity;
};

struct TrialReport {
  std::string object;
  CavityKind cavity_kind = CavityKind::kPrismatic;
  Method method = Method::kKitNet;
  std::string estimator;
  double initial_angle_deg = 0.0;
  std::vector<StepRecord> steps;
  Termination terminated_by = Termination::kIterLimit;
  Vec3 translation_applied = Vec3::Zero();
  std::optional<FitResult> percent_fit;
  FitMode fit_mode = FitMode::kFinalPose;
  bool success = false;
  double final_residual_deg = 0.0;
  std::string error;
  double wall_time_s = 0.0;

  std::size_t applied_steps() const;
};

/// Builds the goal image for the cavity kind, runs the rotation loop (or a
/// baseline), the translation step and the percent-fit evaluation. Failures
/// are reported in TrialReport::error rather than thrown.
TrialReport run_trial(const KittingTrial& trial);

}  // namespace kitnet
