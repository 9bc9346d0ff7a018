#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace kitnet {

FitResult fit_interval(double kappa_hat, std::size_t n) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "percent fit needs at least one sample");
  const double half = 1.96 * std::sqrt(kappa_hat * (1.0 - kappa_hat) / static_cast<double>(n));
  return {kappa_hat, n, std::max(0.0, kappa_hat - half), std::min(1.0, kappa_hat + half)};
}

FitResult percent_fit(const TriMesh& object, const Pose& object_pose, const TriMesh& cavity, const Pose& cavity_pose,
                      std::size_t n, Rng& rng) {
  if (!cavity.watertight()) fail(ErrorCode::kNotWatertight, "cavity mesh '" + cavity.name() + "' is not watertight");
  const PointCloud samples = sample_volume_points(object, n, rng);
  // Object-local to cavity-local. An exact identity keeps the samples
  // bit-identical, so an object fitted into itself scores exactly 1.
  const Pose relative = compose(cavity_pose.inverse(), object_pose);
  const bool same_frame = relative.rotation.wxyz() == UnitQuaternion::identity().wxyz() &&
                          relative.translation == Vec3::Zero();
  std::size_t inside = 0;
  for (const Vec3& p : samples.points) {
    if (contains(cavity, same_frame ? p : relative.apply(p))) ++inside;
  }
  return fit_interval(static_cast<double>(inside) / static_cast<double>(n), n);
}

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(std::int32_t id, const Vec3& q, std::size_t& best, double& best_d2) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = (points_[order_[i]] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && order_[i] < best)) best_d2 = d2, best = order_[i];
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best, best_d2);
  if (diff * diff <= best_d2) search(far, q, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& q) const {
  if (points_.empty()) fail(ErrorCode::kInvalidArgument, "nearest-neighbour query on an empty tree");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, q, best, best_d2);
  return {best, best_d2};
}

namespace {

double mean_nn(std::span<const Vec3> from, const KdTree& to) {
  double sum = 0.0;
  for (const Vec3& p : from) sum += to.nearest(p).second;
  return sum / static_cast<double>(from.size());
}

void require_points(const PointCloud& c, const char* which) {
  if (c.empty()) fail(ErrorCode::kInvalidArgument, std::string("chamfer: cloud ") + which + " is empty");
}

std::vector<Vec3> centered(const PointCloud& c, const Vec3& at) {
  std::vector<Vec3> out;
  out.reserve(c.size());
  for (const Vec3& p : c.points) out.push_back(p - at);
  return out;
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  require_points(a, "a");
  require_points(b, "b");
  const KdTree ta(a.points), tb(b.points);
  return mean_nn(a.points, tb) + mean_nn(b.points, ta);
}

RotationalChamfer::RotationalChamfer(const PointCloud& a, const PointCloud& b)
    : a_((require_points(a, "a"), centered(a, centroid(a)))),
      b_((require_points(b, "b"), centered(b, centroid(b)))),
      centroid_a_(centroid(a)),
      centroid_b_(centroid(b)),
      tree_a_(a_),
      tree_b_(b_) {}

RotationalChamfer::RotationalChamfer(const PointCloud& a, const PointCloud& b, const Vec3& centroid_a,
                                     const Vec3& centroid_b)
    : a_((require_points(a, "a"), centered(a, centroid_a))),
      b_((require_points(b, "b"), centered(b, centroid_b))),
      centroid_a_(centroid_a),
      centroid_b_(centroid_b),
      tree_a_(a_),
      tree_b_(b_) {}

double RotationalChamfer::operator()(const UnitQuaternion& rotation) const {
  const Mat3 r = rotation.matrix();
  double ab = 0.0;
  for (const Vec3& p : a_) ab += tree_b_.nearest(r * p).second;
  double ba = 0.0;
  for (const Vec3& p : b_) ba += tree_a_.nearest(r.transpose() * p).second;
  return ab / static_cast<double>(a_.size()) + ba / static_cast<double>(b_.size());
}

Pose Baseline2dResult::as_pose() const {
  return compose(Pose::from_translation(translation), rotate_about(Pose::identity(), rotation, object_centroid));
}

Baseline2dResult baseline_2d(const DepthImage& image_object, const DepthImage& image_cavity_goal,
                             const CameraModel& camera, double plane_depth, double slack,
                             std::size_t max_points, Rng& rng) {
  const PixelMask mask_o = segment_workspace(image_object, plane_depth, slack);
  const PixelMask mask_g = segment_workspace(image_cavity_goal, plane_depth, slack);
  if (mask_o.count() == 0) fail(ErrorCode::kEmptyForeground, "2D baseline: object image has no foreground");
  if (mask_g.count() == 0) fail(ErrorCode::kEmptyForeground, "2D baseline: goal image has no foreground");
  // Centroids come from the full clouds; subsampling shifts them.
  const PointCloud object_full = deproject(image_object, camera, &mask_o);
  const PointCloud goal_full = deproject(image_cavity_goal, camera, &mask_g);
  const RotationalChamfer cost(farthest_point_sample(object_full, max_points, rng),
                               farthest_point_sample(goal_full, max_points, rng), centroid(object_full),
                               centroid(goal_full));

  Baseline2dResult best;
  best.cost = std::numeric_limits<double>::infinity();
  // Visit 0, 1, -1, 2, -2, ... so a strict comparison keeps the smallest
  // |angle| among equal costs.
  for (int k = 0; k < 360; ++k) {
    const int deg = (k % 2 == 1) ? (k + 1) / 2 : -(k / 2);
    const int wrapped = deg == -180 ? 180 : deg;
    const UnitQuaternion r = rot_z(deg2rad(wrapped));
    const double c = cost(r);
    if (c < best.cost) {
      best.cost = c;
      best.rotation = r;
      best.angle_deg = wrapped;
    }
  }
  best.object_centroid = cost.centroid_a();
  best.translation = cost.centroid_b() - cost.centroid_a();
  best.translation.z() = 0.0;
  return best;
}

UnitQuaternion baseline_random(const UnitQuaternion& true_rotation, Rng& rng) {
  const double angle = true_rotation.angle();
  if (angle == 0.0) return UnitQuaternion::identity();
  return UnitQuaternion::from_axis_angle(random_unit_vector(rng), angle).canonical();
}

}  // namespace kitnet
