#include "controller.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dataset.hpp"
#include "error.hpp"

namespace kitnet {

ControllerConfig ControllerConfig::legacy() { return {0.2, 0.5, 50}; }

void ControllerConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) fail(ErrorCode::kConfig, "controller eta must be in (0, 1]");
  if (!(delta_deg > 0.0)) fail(ErrorCode::kConfig, "controller delta_deg must be > 0");
  if (max_iters < 1) fail(ErrorCode::kConfig, "controller max_iters must be >= 1");
}

const char* cavity_kind_name(CavityKind kind) {
  switch (kind) {
    case CavityKind::kPrismatic: return "prismatic";
    case CavityKind::kConvexConformal: return "convex_conformal";
    case CavityKind::kConcaveConformal: return "concave_conformal";
  }
  return "unknown";
}

CavityKind parse_cavity_kind(std::string_view name) {
  for (auto k : {CavityKind::kPrismatic, CavityKind::kConvexConformal, CavityKind::kConcaveConformal}) {
    if (name == cavity_kind_name(k)) return k;
  }
  fail(ErrorCode::kConfig, "unknown cavity kind '" + std::string(name) + "'");
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kThreshold: return "THRESHOLD";
    case Termination::kIterLimit: return "ITER_LIMIT";
    case Termination::kError: return "ERROR";
  }
  return "unknown";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kKitNet: return "kitnet";
    case Method::kBaseline2d: return "baseline_2d";
    case Method::kBaselineRandom: return "baseline_random";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::kKitNet, Method::kBaseline2d, Method::kBaselineRandom}) {
    if (name == method_name(m)) return m;
  }
  fail(ErrorCode::kConfig, "unknown method '" + std::string(name) + "'");
}

const char* fit_mode_name(FitMode m) {
  switch (m) {
    case FitMode::kAuto: return "auto";
    case FitMode::kFinalPose: return "final_pose";
    case FitMode::kRotationOnly: return "rotation_only";
  }
  return "unknown";
}

FitMode parse_fit_mode(std::string_view name) {
  for (auto m : {FitMode::kAuto, FitMode::kFinalPose, FitMode::kRotationOnly}) {
    if (name == fit_mode_name(m)) return m;
  }
  fail(ErrorCode::kConfig, "unknown fit mode '" + std::string(name) + "'");
}

void SceneConfig::validate() const {
  camera.validate();
  if (!(plane_depth() > 0.0)) fail(ErrorCode::kConfig, "camera must be above the workspace plane");
  if (!(hold_position.z() > plane_z && hold_position.z() < camera.pose.translation.z())) {
    fail(ErrorCode::kConfig, "hold position must lie between the plane and the camera");
  }
  if (!(segment_slack >= 0.0)) fail(ErrorCode::kConfig, "segment_slack must be >= 0");
  if (!(conformal_clearance > 0.0)) fail(ErrorCode::kConfig, "conformal_clearance must be > 0");
}

namespace {

// Lowest and highest z of R (v - c) over the vertices of `mesh`.
std::pair<double, double> z_range(const std::vector<Vec3>& verts, const UnitQuaternion& r, const Vec3& c) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec3& v : verts) {
    const double z = apply(r, v - c).z();
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  return {lo, hi};
}

}  // namespace

Cavity build_cavity(const TriMesh& object, CavityKind kind, const UnitQuaternion& goal_rotation,
                    const SceneConfig& scene) {
  scene.validate();
  Cavity cav;
  cav.goal_rotation = goal_rotation.canonical();
  const Vec3& c = object.centroid();
  const Vec2& xy = scene.cavity_xy;
  if (kind == CavityKind::kPrismatic) {
    const OrientedBox& local = object.obb();
    const TriMesh box = box_mesh(OrientedBox{Vec3::Zero(), local.half_extents, UnitQuaternion::identity()}, "cavity");
    const UnitQuaternion box_rot = compose(goal_rotation, local.rotation);
    const Vec3 box_offset = apply(goal_rotation, local.center - c);  // box centre relative to the object centroid
    const auto [lo, hi] = z_range(box.vertices(), box_rot, Vec3::Zero());
    (void)hi;
    cav.goal_centroid = Vec3(xy.x(), xy.y(), scene.plane_z - (box_offset.z() + lo));
    cav.mesh = std::make_shared<TriMesh>(box);
    cav.pose = Pose{box_rot, cav.goal_centroid + box_offset};
    return cav;
  }
  auto shell = std::make_shared<TriMesh>(offset_mesh(object, scene.conformal_clearance).with_name("cavity"));
  if (!shell->watertight()) fail(ErrorCode::kNotWatertight, "offset cavity of '" + object.name() + "' is not watertight");
  if (kind == CavityKind::kConvexConformal) {
    const auto [lo, hi] = z_range(shell->vertices(), goal_rotation, c);
    (void)hi;
    cav.goal_centroid = Vec3(xy.x(), xy.y(), scene.plane_z - lo);
  } else {
    // Pressed in up to the centroid, so the opening is a full cross-section.
    cav.goal_centroid = Vec3(xy.x(), xy.y(), scene.plane_z);
    cav.is_void = true;
  }
  cav.mesh = shell;
  cav.pose = centroid_pose(object, goal_rotation, cav.goal_centroid);
  return cav;
}

DepthImage render_cavity(const Cavity& cavity, const SceneConfig& scene) {
  Scene s;
  s.ground_z = scene.plane_z;
  (cavity.is_void ? s.voids : s.solids).push_back({cavity.mesh.get(), cavity.pose});
  return render_scene(s, scene.camera);
}

ConcaveGoal synthesize_concave_goal(const DepthImage& image_cavity, const CameraModel& camera, double plane_depth,
                                    double slack) {
  const PixelMask mask = segment_workspace(image_cavity, plane_depth, slack);
  if (mask.count() == 0) fail(ErrorCode::kEmptyForeground, "cavity image has no foreground after segmentation");
  const PointCloud cloud = deproject(image_cavity, camera, &mask);
  ConcaveGoal goal;
  goal.center = centroid(cloud);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec3& p : cloud.points) {
    const Eigen::Vector2d d(p.x() - goal.center.x(), p.y() - goal.center.y());
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d ev = eig.eigenvalues();  // ascending
  if (ev.sum() <= 0.0 || (ev[1] - ev[0]) <= 1e-3 * ev.sum()) {
    goal.axis = apply(camera.pose.rotation, Vec3::UnitX());
    goal.fallback_axis = true;
  } else {
    const Eigen::Vector2d e = eig.eigenvectors().col(1);
    goal.axis = Vec3(e.x(), e.y(), 0.0).normalized();
  }
  const UnitQuaternion flip = UnitQuaternion::from_axis_angle(goal.axis, std::numbers::pi);
  const PointCloud turned = transform(cloud, rotate_about(Pose::identity(), flip, goal.center));
  goal.image = project_points(turned, camera);
  return goal;
}

Vec3 translation_step(const DepthImage& image_object, const DepthImage& image_cavity, const CameraModel& camera,
                      double plane_depth, double slack, double drop) {
  const PixelMask mo = segment_workspace(image_object, plane_depth, slack);
  const PixelMask mc = segment_workspace(image_cavity, plane_depth, slack);
  if (mo.count() == 0) fail(ErrorCode::kEmptyForeground, "object image has no foreground");
  if (mc.count() == 0) fail(ErrorCode::kEmptyForeground, "cavity image has no foreground");
  const Vec3 d = centroid(deproject(image_cavity, camera, &mc)) - centroid(deproject(image_object, camera, &mo));
  return Vec3(d.x(), d.y(), drop);
}

LoopResult rotation_loop(const UnitQuaternion& start, const UnitQuaternion& target,
                         const std::function<DepthImage(const UnitQuaternion&)>& observe, const DepthImage& goal_image,
                         RotationEstimator& estimator, const ControllerConfig& config) {
  config.validate();
  LoopResult out;
  UnitQuaternion current = start;
  for (int k = 0; k < config.max_iters; ++k) {
    const UnitQuaternion truth = compose(target, inverse(current)).canonical();
    StepRecord step;
    step.iteration = k;
    step.residual_true_angle_deg = rad2deg(truth.angle());
    try {
      step.estimate = estimator.estimate(observe(current), goal_image, truth).rotation;
    } catch (const std::exception& e) {
      out.terminated_by = Termination::kError;
      out.error = e.what();
      out.final_rotation = current;
      return out;
    }
    if (rad2deg(step.estimate.angle()) < config.delta_deg) {
      out.steps.push_back(step);
      out.terminated_by = Termination::kThreshold;
      out.final_rotation = current;
      return out;
    }
    step.applied = slerp(UnitQuaternion::identity(), step.estimate, config.eta).canonical();
    current = compose(step.applied, current).canonical();
    out.steps.push_back(step);
  }
  out.terminated_by = Termination::kIterLimit;
  out.final_rotation = current;
  return out;
}

std::size_t TrialReport::applied_steps() const {
  std::size_t n = 0;
  for (const StepRecord& s : steps) n += s.applied.angle() > 0.0 ? 1 : 0;
  return n;
}

namespace {

void run_trial_inner(const KittingTrial& trial, TrialReport& report) {
  if (!trial.object) fail(ErrorCode::kInvalidArgument, "trial has no object mesh");
  const TriMesh& object = *trial.object;
  const SceneConfig& scene = trial.scene;
  scene.validate();
  trial.config.validate();
  if (trial.fit_samples == 0) fail(ErrorCode::kConfig, "fit_samples must be >= 1");

  const Cavity cavity = trial.cavity ? *trial.cavity : build_cavity(object, trial.cavity_kind, trial.goal_rotation, scene);
  const double plane_depth = scene.plane_depth();
  const CameraModel& camera = scene.camera;

  // Goal image and the orientation it asks for.
  const DepthImage cavity_image = render_cavity(cavity, scene);
  DepthImage goal_image;
  UnitQuaternion target = cavity.goal_rotation;
  std::optional<UnitQuaternion> flip;
  if (trial.cavity_kind == CavityKind::kConcaveConformal) {
    const ConcaveGoal g = synthesize_concave_goal(cavity_image, camera, plane_depth, scene.segment_slack);
    goal_image = g.image;
    flip = UnitQuaternion::from_axis_angle(g.axis, std::numbers::pi);
    target = compose(*flip, target).canonical();
  } else {
    goal_image = apply_mask(cavity_image, segment_workspace(cavity_image, plane_depth, scene.segment_slack));
  }
  if (goal_image.foreground_count() == 0) fail(ErrorCode::kEmptyForeground, "goal image has no foreground");

  const UnitQuaternion start = compose(trial.initial_perturbation, target).canonical();
  report.initial_angle_deg = rad2deg(geodesic_angle(start, target));
  auto observe = [&](const UnitQuaternion& q) {
    return render_depth(object, centroid_pose(object, q, scene.hold_position), camera);
  };

  UnitQuaternion final_rotation = start;
  Rng rng(derive_seed(trial.seed, "method"));
  switch (trial.method) {
    case Method::kKitNet: {
      report.estimator = estimator_kind_name(trial.estimator.kind);
      EstimatorSpec spec = trial.estimator;
      if (spec.cost == AlignmentCost::kAuto) {
        spec.cost = trial.cavity_kind == CavityKind::kPrismatic ? AlignmentCost::kBoxExtent : AlignmentCost::kChamfer;
      }
      auto estimator = make_estimator(spec, camera, derive_seed(trial.seed, "estimator"));
      LoopResult loop = rotation_loop(start, target, observe, goal_image, *estimator, trial.config);
      report.steps = std::move(loop.steps);
      report.terminated_by = loop.terminated_by;
      if (loop.terminated_by == Termination::kError) fail(ErrorCode::kInternal, "estimator failed: " + loop.error);
      final_rotation = loop.final_rotation;
      break;
    }
    case Method::kBaseline2d: {
      const Baseline2dResult b = baseline_2d(observe(start), goal_image, camera, plane_depth, scene.segment_slack,
                                             trial.estimator.max_points, rng);
      report.steps.push_back({0, b.rotation, b.rotation, report.initial_angle_deg});
      report.terminated_by = Termination::kIterLimit;
      final_rotation = compose(b.rotation, start).canonical();
      break;
    }
    case Method::kBaselineRandom: {
      const UnitQuaternion truth = compose(target, inverse(start)).canonical();
      const UnitQuaternion r = baseline_random(truth, rng);
      report.steps.push_back({0, r, r, report.initial_angle_deg});
      report.terminated_by = Termination::kIterLimit;
      final_rotation = compose(r, start).canonical();
      break;
    }
  }

  const double drop = cavity.goal_centroid.z() - scene.hold_position.z();
  const DepthImage final_image = observe(final_rotation);
  report.translation_applied = translation_step(final_image, goal_image, camera, plane_depth, scene.segment_slack, drop);
  UnitQuaternion inserted = final_rotation;
  if (flip) {
    // A concave goal was matched in the flipped frame. Turn back about the
    // observed surface centroid, which is what the goal image was flipped
    // about, then drop to the cavity depth.
    const Vec3 shift(report.translation_applied.x(), report.translation_applied.y(), 0.0);
    const Vec3 q = centroid(deproject(final_image, camera));
    Vec3 moved = q + shift + apply(*flip, scene.hold_position - q);
    moved.z() = cavity.goal_centroid.z();
    report.translation_applied = moved - scene.hold_position;
    inserted = compose(*flip, final_rotation).canonical();
  }
  report.final_residual_deg = rad2deg(geodesic_angle(inserted, cavity.goal_rotation));

  FitMode mode = trial.fit_mode;
  if (mode == FitMode::kAuto) {
    mode = trial.cavity_kind == CavityKind::kPrismatic ? FitMode::kRotationOnly : FitMode::kFinalPose;
  }
  report.fit_mode = mode;
  const Vec3 centre = mode == FitMode::kRotationOnly ? cavity.goal_centroid
                                                     : Vec3(scene.hold_position + report.translation_applied);
  Rng fit_rng(derive_seed(trial.seed, "fit"));
  report.percent_fit = percent_fit(object, centroid_pose(object, inserted, centre), *cavity.mesh, cavity.pose,
                                   trial.fit_samples, fit_rng);
  report.success = report.percent_fit->kappa_hat >= trial.success_threshold;
}

}  // namespace

TrialReport run_trial(const KittingTrial& trial) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialReport report;
  report.object = trial.object ? trial.object->name() : std::string();
  report.cavity_kind = trial.cavity_kind;
  report.method = trial.method;
  report.estimator = "-";
  report.initial_angle_deg = rad2deg(trial.initial_perturbation.angle());
  try {
    run_trial_inner(trial, report);
  } catch (const std::exception& e) {
    report.terminated_by = Termination::kError;
    report.error = e.what();
    report.percent_fit.reset();
    report.success = false;
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace kitnet
