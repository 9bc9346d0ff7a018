#include "estimator.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "eval.hpp"
#include "mesh.hpp"
#include "wire.hpp"

namespace kitnet {

const char* estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kPerfect: return "perfect";
    case EstimatorKind::kNoisyOracle: return "noisy_oracle";
    case EstimatorKind::kBruteForce: return "brute_force";
    case EstimatorKind::kExternal: return "external";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  for (auto k : {EstimatorKind::kPerfect, EstimatorKind::kNoisyOracle, EstimatorKind::kBruteForce,
                 EstimatorKind::kExternal}) {
    if (name == estimator_kind_name(k)) return k;
  }
  fail(ErrorCode::kConfig, "unknown estimator kind '" + std::string(name) + "'");
}

const char* alignment_cost_name(AlignmentCost cost) {
  switch (cost) {
    case AlignmentCost::kAuto: return "auto";
    case AlignmentCost::kChamfer: return "chamfer";
    case AlignmentCost::kBoxExtent: return "box_extent";
  }
  return "unknown";
}

AlignmentCost parse_alignment_cost(std::string_view name) {
  for (auto c : {AlignmentCost::kAuto, AlignmentCost::kChamfer, AlignmentCost::kBoxExtent}) {
    if (name == alignment_cost_name(c)) return c;
  }
  fail(ErrorCode::kConfig, "unknown alignment cost '" + std::string(name) + "'");
}

void EstimatorSpec::validate() const {
  if (!(sigma_deg >= 0.0)) fail(ErrorCode::kConfig, "estimator sigma_deg must be >= 0");
  if (!(grid_step_deg > 0.0 && grid_step_deg <= 90.0)) fail(ErrorCode::kConfig, "grid_step_deg must be in (0, 90]");
  if (!(max_angle_deg >= 0.0 && max_angle_deg <= 180.0)) fail(ErrorCode::kConfig, "max_angle_deg must be in [0, 180]");
  if (refine_iters < 0) fail(ErrorCode::kConfig, "refine_iters must be >= 0");
  if (!(min_step_deg > 0.0)) fail(ErrorCode::kConfig, "min_step_deg must be > 0");
  if (max_points < 3) fail(ErrorCode::kConfig, "max_points must be >= 3");
  if (!(timeout_s > 0.0)) fail(ErrorCode::kConfig, "timeout_s must be > 0");
  if (kind == EstimatorKind::kExternal && endpoint.empty()) {
    fail(ErrorCode::kConfig, "external estimator needs an endpoint");
  }
}

std::vector<Vec3> icosahedral_axes() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> raw;
  auto cyclic = [&](double a, double b, double c) {
    for (double sa : {-1.0, 1.0}) {
      for (double sb : {-1.0, 1.0}) {
        for (double sc : {-1.0, 1.0}) {
          const Vec3 p(sa * a, sb * b, sc * c);
          raw.push_back(p);
          raw.emplace_back(p.z(), p.x(), p.y());
          raw.emplace_back(p.y(), p.z(), p.x());
        }
      }
    }
  };
  cyclic(0.0, 1.0, phi);                      // icosahedron vertices
  cyclic(1.0, 1.0, 1.0);                      // dodecahedron vertices (face centres)
  cyclic(0.0, 1.0 / phi, phi);
  cyclic(1.0, 0.0, 0.0);                      // edge midpoints
  cyclic(0.5 * phi, 0.5, 0.5 / phi);
  std::vector<Vec3> axes;
  for (Vec3 p : raw) {
    p.normalize();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(p[i]) > 1e-12) {
        if (p[i] < 0) p = -p;
        break;
      }
    }
    bool seen = false;
    for (const Vec3& q : axes) seen = seen || (q - p).norm() < 1e-9;
    if (!seen) axes.push_back(p);
  }
  return axes;
}

std::vector<UnitQuaternion> brute_force_grid(double grid_step_deg, double max_angle_deg) {
  std::vector<UnitQuaternion> grid{UnitQuaternion::identity()};
  const auto steps = static_cast<int>(std::floor(max_angle_deg / grid_step_deg + 1e-9));
  for (const Vec3& axis : icosahedral_axes()) {
    for (double sense : {1.0, -1.0}) {
      for (int k = 1; k <= steps; ++k) {
        grid.push_back(UnitQuaternion::from_axis_angle(sense * axis, deg2rad(k * grid_step_deg)));
      }
    }
  }
  return grid;
}

double brute_force_cost(const UnitQuaternion& candidate, const PointCloud& cloud_start, const PointCloud& cloud_goal) {
  return RotationalChamfer(cloud_start, cloud_goal)(candidate);
}

BruteForceResult brute_force_search(const PointCloud& cloud_start, const PointCloud& cloud_goal,
                                    const EstimatorSpec& spec) {
  const RotationalChamfer cost(cloud_start, cloud_goal);
  return brute_force_search([&](const UnitQuaternion& q) { return cost(q); }, spec);
}

CovisibleChamfer::CovisibleChamfer(OrientedCloud start, const Vec3& eye_start, OrientedCloud goal,
                                   const Vec3& eye_goal)
    : s_(std::move(start)), g_(std::move(goal)), eye_s_(eye_start), eye_g_(eye_goal) {
  if (s_.points.empty() || g_.points.empty()) fail(ErrorCode::kInvalidArgument, "co-visible Chamfer of an empty cloud");
  cs_ = centroid(s_.points);
  cg_ = centroid(g_.points);
  for (Vec3& p : s_.points) p -= cs_;
  for (Vec3& p : g_.points) p -= cg_;
}

double CovisibleChamfer::operator()(const UnitQuaternion& rotation) const {
  const Mat3 m = rotation.matrix();
  PointCloud a, b;
  for (std::size_t i = 0; i < s_.points.size(); ++i) {
    const Vec3 p = m * s_.points[i];
    if ((m * s_.normals[i]).dot(eye_g_ - (cg_ + p)) > 0.0) a.points.push_back(p);
  }
  for (std::size_t i = 0; i < g_.points.size(); ++i) {
    const Vec3 back = m.transpose() * g_.points[i];
    if ((m.transpose() * g_.normals[i]).dot(eye_s_ - (cs_ + back)) > 0.0) b.points.push_back(g_.points[i]);
  }
  if (a.size() < 3 || b.size() < 3) return std::numeric_limits<double>::infinity();
  return RotationalChamfer(a, b)(UnitQuaternion::identity());
}

BoxExtentCost::BoxExtentCost(PointCloud start, const PointCloud& goal) : s_(std::move(start.points)) {
  if (s_.empty() || goal.empty()) fail(ErrorCode::kInvalidArgument, "box extent cost of an empty cloud");
  const Vec3 c = centroid(s_);
  for (Vec3& p : s_) p -= c;
  const OrientedBox box = min_volume_obb(goal.points);
  axes_ = box.rotation.matrix();
  extent_ = 2.0 * Vec3(box.half_extents[0], box.half_extents[1], box.half_extents[2]);
}

double BoxExtentCost::operator()(const UnitQuaternion& rotation) const {
  const Mat3 m = axes_.transpose() * rotation.matrix();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : s_) {
    const Vec3 v = m * p;
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo - extent_).squaredNorm();
}

BruteForceResult brute_force_search(const std::function<double(const UnitQuaternion&)>& cost,
                                    const EstimatorSpec& spec) {
  BruteForceResult result;
  result.cost = std::numeric_limits<double>::infinity();
  for (const UnitQuaternion& q : brute_force_grid(spec.grid_step_deg, spec.max_angle_deg)) {
    const double c = cost(q);
    ++result.evaluations;
    if (c < result.cost) result.cost = c, result.rotation = q;
  }
  result.best_grid_cost = result.cost;

  double step = 0.5 * spec.grid_step_deg;
  for (int sweep = 0; sweep < spec.refine_iters && step >= spec.min_step_deg; ++sweep) {
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sense : {1.0, -1.0}) {
        const UnitQuaternion q =
            compose(UnitQuaternion::from_axis_angle(sense * Vec3::Unit(axis), deg2rad(step)), result.rotation);
        const double c = cost(q);
        ++result.evaluations;
        if (c < result.cost) {
          result.cost = c;
          result.rotation = q;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  result.rotation = result.rotation.canonical();
  return result;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const UnitQuaternion& require_truth(const std::optional<UnitQuaternion>& truth, const char* kind) {
  if (!truth) fail(ErrorCode::kInvalidArgument, std::string(kind) + " estimator needs the ground-truth rotation");
  return *truth;
}

void require_same_size(const DepthImage& a, const DepthImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    fail(ErrorCode::kSizeMismatch, "start and goal rasters differ in size");
  }
}

class PerfectEstimator final : public RotationEstimator {
 public:
  RotationEstimate estimate(const DepthImage& s, const DepthImage& g,
                            const std::optional<UnitQuaternion>& truth) override {
    require_same_size(s, g);
    return {require_truth(truth, "perfect").canonical(), 1.0, 0.0};
  }
};

class NoisyOracle final : public RotationEstimator {
 public:
  NoisyOracle(double sigma_deg, std::uint64_t seed) : sigma_(deg2rad(sigma_deg)), rng_(seed) {}
  RotationEstimate estimate(const DepthImage& s, const DepthImage& g,
                            const std::optional<UnitQuaternion>& truth) override {
    require_same_size(s, g);
    const UnitQuaternion& t = require_truth(truth, "noisy oracle");
    const Vec3 axis = random_unit_vector(rng_);
    const double angle = std::abs(sigma_ * rng_.normal());
    return {compose(UnitQuaternion::from_axis_angle(axis, angle), t).canonical(), std::nullopt, 0.0};
  }

 private:
  double sigma_;
  Rng rng_;
};

class BruteForceEstimator final : public RotationEstimator {
 public:
  BruteForceEstimator(EstimatorSpec spec, CameraModel camera, std::uint64_t seed)
      : spec_(std::move(spec)), camera_(std::move(camera)), rng_(seed) {}
  RotationEstimate estimate(const DepthImage& s, const DepthImage& g, const std::optional<UnitQuaternion>&) override {
    const auto t0 = std::chrono::steady_clock::now();
    require_same_size(s, g);
    if (s.foreground_count() == 0) fail(ErrorCode::kEmptyForeground, "brute force: start image has no foreground");
    if (g.foreground_count() == 0) fail(ErrorCode::kEmptyForeground, "brute force: goal image has no foreground");
    BruteForceResult r;
    if (spec_.cost == AlignmentCost::kBoxExtent) {
      const PointCloud cs = farthest_point_sample(deproject(s, camera_), spec_.max_points, rng_);
      const PointCloud cg = farthest_point_sample(deproject(g, camera_), spec_.max_points, rng_);
      const BoxExtentCost cost(cs, cg);
      r = brute_force_search([&](const UnitQuaternion& q) { return cost(q); }, spec_);
    } else if (spec_.covisibility) {
      const OrientedCloud os = subsample(deproject_oriented(s, camera_));
      const OrientedCloud og = subsample(deproject_oriented(g, camera_));
      if (os.points.size() < 3 || og.points.size() < 3) {
        fail(ErrorCode::kEmptyForeground, "brute force: too few surface points for normals");
      }
      const CovisibleChamfer cost(os, camera_.origin(), og, camera_.origin());
      r = brute_force_search([&](const UnitQuaternion& q) { return cost(q); }, spec_);
    } else {
      const PointCloud cs = farthest_point_sample(deproject(s, camera_), spec_.max_points, rng_);
      const PointCloud cg = farthest_point_sample(deproject(g, camera_), spec_.max_points, rng_);
      r = brute_force_search(cs, cg, spec_);
    }
    return {r.rotation, std::nullopt, seconds_since(t0)};
  }

 private:
  OrientedCloud subsample(const OrientedCloud& c) {
    OrientedCloud out;
    for (std::size_t i : farthest_point_indices(c.points, spec_.max_points, rng_)) {
      out.points.push_back(c.points[i]);
      out.normals.push_back(c.normals[i]);
    }
    return out;
  }

  EstimatorSpec spec_;
  CameraModel camera_;
  Rng rng_;
};

class ExternalEstimator final : public RotationEstimator {
 public:
  explicit ExternalEstimator(const EstimatorSpec& spec) : client_(spec.endpoint, spec.timeout_s) {}
  RotationEstimate estimate(const DepthImage& s, const DepthImage& g, const std::optional<UnitQuaternion>&) override {
    const auto t0 = std::chrono::steady_clock::now();
    require_same_size(s, g);
    const WireEstimate w = client_.estimate(s, g);
    return {w.rotation.canonical(), w.confidence, seconds_since(t0)};
  }

 private:
  ExternalClient client_;
};

}  // namespace

std::unique_ptr<RotationEstimator> make_estimator(const EstimatorSpec& spec, const CameraModel& camera,
                                                  std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case EstimatorKind::kPerfect: return std::make_unique<PerfectEstimator>();
    case EstimatorKind::kNoisyOracle: return std::make_unique<NoisyOracle>(spec.sigma_deg, seed);
    case EstimatorKind::kBruteForce: return std::make_unique<BruteForceEstimator>(spec, camera, seed);
    case EstimatorKind::kExternal: return std::make_unique<ExternalEstimator>(spec);
  }
  fail(ErrorCode::kInternal, "unhandled estimator kind");
}

}  // namespace kitnet
