#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "controller.hpp"
#include "dataset.hpp"
#include "shapes.hpp"

using namespace kitnet;
using testutil::code;
using testutil::error_code_of;

namespace {

// Images are irrelevant to the oracle estimators.
DepthImage blank(const UnitQuaternion&) { return DepthImage(8, 8); }

class FixedEstimator final : public RotationEstimator {
 public:
  explicit FixedEstimator(UnitQuaternion q) : q_(q) {}
  RotationEstimate estimate(const DepthImage&, const DepthImage&, const std::optional<UnitQuaternion>&) override {
    return {q_, std::nullopt, 0.0};
  }

 private:
  UnitQuaternion q_;
};

class ThrowingEstimator final : public RotationEstimator {
 public:
  RotationEstimate estimate(const DepthImage&, const DepthImage&, const std::optional<UnitQuaternion>&) override {
    fail(ErrorCode::kTransport, "peer went away");
  }
};

std::unique_ptr<RotationEstimator> oracle(EstimatorKind kind, double sigma, std::uint64_t seed) {
  EstimatorSpec s;
  s.kind = kind;
  s.sigma_deg = sigma;
  return make_estimator(s, CameraModel::overhead(8, 8, 45.0, 0.8), seed);
}

std::shared_ptr<const TriMesh> named(const char* name) {
  for (const TriMesh& m : procedural_corpus())
    if (m.name() == name) return std::make_shared<TriMesh>(m);
  return nullptr;
}

double footprint_iou(const PixelMask& a, const PixelMask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] && b.bits[i];
    uni += a.bits[i] || b.bits[i];
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace

TEST_CASE("controller config") {
  ControllerConfig c;
  CHECK(c.eta == 0.8);
  CHECK(c.delta_deg == 5.0);
  CHECK(c.max_iters == 8);
  const ControllerConfig l = ControllerConfig::legacy();
  CHECK(l.eta == 0.2);
  CHECK(l.delta_deg == 0.5);
  CHECK(l.max_iters == 50);
  for (auto bad : {[] { ControllerConfig x; x.eta = 0.0; return x; }(), [] { ControllerConfig x; x.eta = 1.5; return x; }(),
                   [] { ControllerConfig x; x.delta_deg = 0.0; return x; }(),
                   [] { ControllerConfig x; x.max_iters = 0; return x; }()})
    CHECK(error_code_of([&] { bad.validate(); }) == code(ErrorCode::kConfig));
}

TEST_CASE("perfect estimation contracts geometrically") {
  auto est = oracle(EstimatorKind::kPerfect, 0, 0);
  const UnitQuaternion target = rot_y(deg2rad(12));
  const UnitQuaternion start = compose(UnitQuaternion::from_axis_angle(Vec3(1, 2, 0).normalized(), deg2rad(30)), target);
  const LoopResult r = rotation_loop(start, target, blank, DepthImage(8, 8), *est, ControllerConfig{});
  CHECK(r.terminated_by == Termination::kThreshold);
  REQUIRE(r.steps.size() == 3);
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const double expected = std::pow(0.2, static_cast<double>(k)) * 30.0;
    CHECK(r.steps[k].residual_true_angle_deg == doctest::Approx(expected).epsilon(1e-6));
  }
  CHECK(rad2deg(r.steps[0].applied.angle()) == doctest::Approx(24.0).epsilon(1e-9));
  CHECK(r.steps[2].applied.angle() == 0.0);
  CHECK(rad2deg(geodesic_angle(r.final_rotation, target)) == doctest::Approx(1.2).epsilon(1e-6));

  // legacy preset: 0.8^k
  ControllerConfig legacy = ControllerConfig::legacy();
  const LoopResult l = rotation_loop(start, target, blank, DepthImage(8, 8), *est, legacy);
  for (std::size_t k = 0; k < l.steps.size(); ++k)
    CHECK(l.steps[k].residual_true_angle_deg == doctest::Approx(std::pow(0.8, double(k)) * 30.0).epsilon(1e-6));
  // smallest k with 30 * 0.8^k < 0.5 is 19: 19 applied, stop at the 20th estimate
  CHECK(l.steps.size() == 20);
  CHECK(l.terminated_by == Termination::kThreshold);

  const LoopResult zero = rotation_loop(target, target, blank, DepthImage(8, 8), *est, ControllerConfig{});
  CHECK(zero.steps.size() == 1);
  CHECK(zero.terminated_by == Termination::kThreshold);
  CHECK(zero.steps[0].applied.angle() == 0.0);
}

TEST_CASE("termination with a stuck or failing estimator") {
  FixedEstimator stuck(rot_z(deg2rad(10)));
  const LoopResult r = rotation_loop(UnitQuaternion::identity(), UnitQuaternion::identity(), blank, DepthImage(8, 8),
                                     stuck, ControllerConfig{});
  CHECK(r.terminated_by == Termination::kIterLimit);
  CHECK(r.steps.size() == 8);

  ThrowingEstimator broken;
  const LoopResult e = rotation_loop(UnitQuaternion::identity(), UnitQuaternion::identity(), blank, DepthImage(8, 8),
                                     broken, ControllerConfig{});
  CHECK(e.terminated_by == Termination::kError);
  CHECK(e.error.find("peer went away") != std::string::npos);
  CHECK(e.steps.empty());
}

TEST_CASE("noisy estimation improves monotonically") {
  int monotone = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(2024, "monotone", t));
    auto est = oracle(EstimatorKind::kNoisyOracle, 2.0, rng.next_u64());
    const UnitQuaternion target = sample_uniform(rng);
    const UnitQuaternion start = compose(UnitQuaternion::from_axis_angle(random_unit_vector(rng), deg2rad(30)), target);
    const LoopResult r = rotation_loop(start, target, blank, DepthImage(8, 8), *est, ControllerConfig{});
    bool ok = true;
    for (std::size_t k = 1; k < r.steps.size(); ++k)
      ok = ok && r.steps[k].residual_true_angle_deg < r.steps[k - 1].residual_true_angle_deg;
    monotone += ok;
  }
  CHECK(monotone >= 0.95 * trials);
}

TEST_CASE("translation by centroid matching") {
  SceneConfig scene;
  const TriMesh box = make_box(0.05, 0.04, 0.03);
  auto shot = [&](const Vec3& at) {
    Scene s;
    s.ground_z = 0.0;
    s.solids.push_back({&box, Pose::from_translation(at)});
    return render_scene(s, scene.camera);
  };
  const double pd = scene.plane_depth();
  const Vec3 aligned = translation_step(shot(Vec3(0.01, 0.02, 0.015)), shot(Vec3(0.01, 0.02, 0.015)), scene.camera, pd,
                                        scene.segment_slack, -0.1);
  CHECK(aligned.head<2>().norm() < 1e-4);
  CHECK(aligned.z() == -0.1);
  const Vec3 shifted = translation_step(shot(Vec3(0.0, 0.0, 0.015)), shot(Vec3(0.05, 0.0, 0.015)), scene.camera, pd,
                                        scene.segment_slack, 0.0);
  const double footprint = scene.camera.pixel_footprint(pd);
  CHECK(std::abs(shifted.x() - 0.05) < footprint);
  CHECK(std::abs(shifted.y()) < footprint);
  Scene empty;
  empty.ground_z = 0.0;
  CHECK(error_code_of([&] {
          translation_step(shot(Vec3::Zero()), render_scene(empty, scene.camera), scene.camera, pd, 0.002, 0.0);
        }) == code(ErrorCode::kEmptyForeground));
}

TEST_CASE("concave goal synthesis") {
  SceneConfig scene;
  const double pd = scene.plane_depth();
  const TriMesh box = make_box(0.08, 0.04, 0.01);
  const Vec3 xy(0.03, -0.02, 0.0);
  Scene hole;
  hole.ground_z = 0.0;
  // shallow, so perspective barely changes the footprint; the void pokes 2 mm
  // above the plane so the opening is strictly inside it
  hole.voids.push_back({&box, Pose::from_translation(xy + Vec3(0, 0, -0.003))});
  const DepthImage dep = render_scene(hole, scene.camera);
  Scene bump;
  bump.ground_z = 0.0;
  bump.solids.push_back({&box, Pose::from_translation(xy + Vec3(0, 0, 0.005))});
  const DepthImage pro = render_scene(bump, scene.camera);

  const ConcaveGoal g = synthesize_concave_goal(dep, scene.camera, pd, scene.segment_slack);
  CHECK_FALSE(g.fallback_axis);
  CHECK(std::abs(g.axis.z()) < 1e-9);
  // long side of the footprint is x
  CHECK(std::abs(g.axis.x()) > 0.99);
  const PixelMask synth(segment_workspace(g.image, pd, scene.segment_slack));
  const PixelMask convex(segment_workspace(pro, pd, scene.segment_slack));
  CHECK(footprint_iou(synth, convex) > 0.9);

  // twice: the footprint centroid stays put
  Scene plane;
  plane.ground_z = 0.0;
  const DepthImage ground = render_scene(plane, scene.camera);
  const ConcaveGoal g2 = synthesize_concave_goal(g.image, scene.camera, pd, scene.segment_slack);
  const Vec2 c1 = foreground_centroid(g.image), c2 = foreground_centroid(g2.image);
  CHECK((c1 - c2).norm() * scene.camera.pixel_footprint(pd) < 1e-3);

  // round depression: no principal axis
  const TriMesh cyl = make_extrusion([] {
    std::vector<Vec2> p;
    for (int i = 0; i < 64; ++i) p.push_back(0.03 * Vec2(std::cos(2 * std::numbers::pi * i / 64), std::sin(2 * std::numbers::pi * i / 64)));
    return p;
  }(), 0.03);
  Scene round;
  round.ground_z = 0.0;
  round.voids.push_back({&cyl, Pose::from_translation(Vec3(0, 0, -0.01))});
  const ConcaveGoal r = synthesize_concave_goal(render_scene(round, scene.camera), scene.camera, pd, scene.segment_slack);
  CHECK(r.fallback_axis);
  CHECK((r.axis - Vec3::UnitX()).norm() < 1e-12);

  CHECK(error_code_of([&] { synthesize_concave_goal(ground, scene.camera, pd, scene.segment_slack); }) ==
        code(ErrorCode::kEmptyForeground));
}

TEST_CASE("perfect trials fit exactly for every cavity kind") {
  for (const char* name : {"lbracket_equal", "box_brick"}) {
    for (CavityKind kind : {CavityKind::kPrismatic, CavityKind::kConvexConformal, CavityKind::kConcaveConformal}) {
      KittingTrial t;
      t.object = named(name);
      t.cavity_kind = kind;
      Rng rng(5);
      t.goal_rotation = sample_uniform(rng);
      t.estimator.kind = EstimatorKind::kPerfect;
      t.fit_samples = 4000;
      t.seed = 3;
      const TrialReport r = run_trial(t);
      INFO(name, " ", cavity_kind_name(kind), " ", r.error);
      CHECK(r.error.empty());
      REQUIRE(r.percent_fit.has_value());
      CHECK(r.percent_fit->kappa_hat >= 0.99);
      CHECK(r.success);
      CHECK(r.applied_steps() == 0);
      CHECK(r.terminated_by == Termination::kThreshold);
    }
  }
}

TEST_CASE("trials: iteration limit, determinism and errors") {
  KittingTrial t;
  t.object = named("tee");
  t.cavity_kind = CavityKind::kConvexConformal;
  Rng rng(6);
  t.goal_rotation = sample_uniform(rng);
  t.initial_perturbation = rot_x(deg2rad(30));
  t.estimator.kind = EstimatorKind::kPerfect;
  t.config.max_iters = 1;
  t.fit_samples = 2000;
  const TrialReport limited = run_trial(t);
  CHECK(limited.terminated_by == Termination::kIterLimit);
  CHECK(limited.steps.size() == 1);
  REQUIRE(limited.percent_fit.has_value());
  CHECK(limited.initial_angle_deg == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(limited.final_residual_deg == doctest::Approx(6.0).epsilon(1e-6));

  t.config = ControllerConfig{};
  t.estimator.kind = EstimatorKind::kNoisyOracle;
  t.estimator.sigma_deg = 2.0;
  t.seed = 99;
  const TrialReport a = run_trial(t), b = run_trial(t);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].estimate.wxyz() == b.steps[i].estimate.wxyz());
  CHECK(a.percent_fit->kappa_hat == b.percent_fit->kappa_hat);
  CHECK(a.translation_applied == b.translation_applied);

  t.estimator.kind = EstimatorKind::kExternal;
  t.estimator.endpoint = "tcp://127.0.0.1:1";
  const TrialReport e = run_trial(t);
  CHECK(e.terminated_by == Termination::kError);
  CHECK_FALSE(e.error.empty());
  CHECK_FALSE(e.percent_fit.has_value());
  CHECK_FALSE(e.success);

  KittingTrial none;
  CHECK(run_trial(none).terminated_by == Termination::kError);
}

TEST_CASE("baselines inside trials") {
  KittingTrial t;
  t.object = named("lbracket_long");
  t.cavity_kind = CavityKind::kConvexConformal;
  t.goal_rotation = rot_z(deg2rad(10));
  t.initial_perturbation = rot_x(deg2rad(30));
  t.fit_samples = 2000;
  t.method = Method::kBaselineRandom;
  const TrialReport r = run_trial(t);
  REQUIRE(r.steps.size() == 1);
  CHECK(rad2deg(r.steps[0].applied.angle()) == doctest::Approx(30.0).epsilon(1e-9));
  t.method = Method::kBaseline2d;
  const TrialReport b = run_trial(t);
  REQUIRE(b.steps.size() == 1);
  // a rotation about z cannot undo a tilt about x
  CHECK(b.final_residual_deg >= 30.0 - 1e-6);
}
