#include "so3.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "error.hpp"

namespace kitnet {

UnitQuaternion UnitQuaternion::from_wxyz(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n < 1e-300) {
    fail(ErrorCode::kInvalidArgument, "quaternion must be finite and non-zero");
  }
  return UnitQuaternion(w / n, x / n, y / n, z / n, RawTag{});
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(angle)) {
    fail(ErrorCode::kInvalidArgument, "axis-angle requires a finite non-zero axis");
  }
  const double s = std::sin(0.5 * angle) / n;
  return from_wxyz(std::cos(0.5 * angle), axis.x() * s, axis.y() * s, axis.z() * s);
}

UnitQuaternion UnitQuaternion::from_rotation_vector(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-300) return identity();
  return from_axis_angle(rotvec / angle, angle);
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& m) {
  Eigen::Quaterniond q(m);
  return from_wxyz(q.w(), q.x(), q.y(), q.z());
}

UnitQuaternion UnitQuaternion::canonical() const {
  // Ties at w = 0 are broken on the first non-zero vector component.
  bool flip = w_ < 0.0;
  if (w_ == 0.0) {
    if (x_ != 0.0) flip = x_ < 0.0;
    else if (y_ != 0.0) flip = y_ < 0.0;
    else flip = z_ < 0.0;
  }
  return flip ? -*this : *this;
}

double UnitQuaternion::angle() const {
  const double vn = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(vn, std::abs(w_));
}

Vec3 UnitQuaternion::axis() const {
  const UnitQuaternion c = canonical();
  Vec3 v(c.x_, c.y_, c.z_);
  const double n = v.norm();
  if (n < 1e-300) return Vec3::UnitX();
  return v / n;
}

Vec3 UnitQuaternion::rotation_vector() const { return axis() * angle(); }

Mat3 UnitQuaternion::matrix() const {
  return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

UnitQuaternion compose(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::from_wxyz(a.w_ * b.w_ - a.x_ * b.x_ - a.y_ * b.y_ - a.z_ * b.z_,
                                   a.w_ * b.x_ + a.x_ * b.w_ + a.y_ * b.z_ - a.z_ * b.y_,
                                   a.w_ * b.y_ - a.x_ * b.z_ + a.y_ * b.w_ + a.z_ * b.x_,
                                   a.w_ * b.z_ + a.x_ * b.y_ - a.y_ * b.x_ + a.z_ * b.w_);
}

UnitQuaternion inverse(const UnitQuaternion& q) {
  return UnitQuaternion(q.w_, -q.x_, -q.y_, -q.z_, UnitQuaternion::RawTag{});
}

Vec3 apply(const UnitQuaternion& q, const Vec3& v) {
  // v' = v + 2w (u x v) + 2 u x (u x v)
  const Vec3 u(q.x(), q.y(), q.z());
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w() * t + u.cross(t);
}

UnitQuaternion canonicalize(const UnitQuaternion& q) { return q.canonical(); }

double geodesic_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
  return compose(inverse(a), b).angle();
}

UnitQuaternion slerp(const UnitQuaternion& q_from, const UnitQuaternion& q_to, double eta) {
  // Relative rotation raised to the power eta; canonical() selects the
  // shorter arc.
  const UnitQuaternion rel = compose(q_to, inverse(q_from)).canonical();
  const double angle = rel.angle();
  if (angle == 0.0) return q_from;
  const UnitQuaternion step = UnitQuaternion::from_axis_angle(rel.axis(), eta * angle);
  return compose(step, q_from);
}

bool approx_equal(const UnitQuaternion& a, const UnitQuaternion& b, double angle_tol) {
  return geodesic_angle(a, b) <= angle_tol;
}

UnitQuaternion rot_x(double angle) { return UnitQuaternion::from_axis_angle(Vec3::UnitX(), angle); }
UnitQuaternion rot_y(double angle) { return UnitQuaternion::from_axis_angle(Vec3::UnitY(), angle); }
UnitQuaternion rot_z(double angle) { return UnitQuaternion::from_axis_angle(Vec3::UnitZ(), angle); }

Vec3 random_unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

UnitQuaternion sample_uniform(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double two_pi = 2.0 * std::numbers::pi;
  return UnitQuaternion::from_wxyz(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                                   a * std::cos(two_pi * u2), b * std::sin(two_pi * u3))
      .canonical();
}

UnitQuaternion sample_bounded(Rng& rng, double max_angle) {
  if (!(max_angle >= 0.0) || max_angle > std::numbers::pi) {
    fail(ErrorCode::kInvalidArgument,
         "sample_bounded: max_angle must lie in [0, pi], got " + std::to_string(max_angle));
  }
  if (max_angle == 0.0) return UnitQuaternion::identity();
  for (;;) {
    const Vec3 axis = random_unit_vector(rng);
    const double angle = rng.uniform() * max_angle;
    const UnitQuaternion q = UnitQuaternion::from_axis_angle(axis, angle).canonical();
    // Rounding in the round trip can land exactly on the bound.
    if (q.angle() < max_angle) return q;
  }
}

Pose Pose::inverse() const {
  const UnitQuaternion inv = kitnet::inverse(rotation);
  return {inv, -kitnet::apply(inv, translation)};
}

std::array<double, 7> Pose::to_array() const {
  return {rotation.w(), rotation.x(), rotation.y(), rotation.z(),
          translation.x(), translation.y(), translation.z()};
}

Pose Pose::from_array(const std::array<double, 7>& a) {
  for (double v : a) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "pose components must be finite");
  }
  return {UnitQuaternion::from_wxyz(a[0], a[1], a[2], a[3]), Vec3(a[4], a[5], a[6])};
}

Pose compose(const Pose& a, const Pose& b) {
  return {compose(a.rotation, b.rotation), apply(a.rotation, b.translation) + a.translation};
}

Pose rotate_about(const Pose& pose, const UnitQuaternion& delta, const Vec3& pivot) {
  return {compose(delta, pose.rotation), apply(delta, pose.translation - pivot) + pivot};
}

}  // namespace kitnet
