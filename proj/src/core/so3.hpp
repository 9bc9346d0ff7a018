#pragma once

#include <array>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rng.hpp"

namespace kitnet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rotation in SO(3) stored as a unit quaternion (w, x, y, z).
///
/// Every constructor and operation renormalizes, so |q| = 1 holds to
/// rounding. q and -q denote the same rotation; metric and equality helpers
/// are sign-invariant and canonical() picks the representative with w >= 0.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  /// Normalizes the input. Throws on a zero or non-finite quaternion.
  static UnitQuaternion from_wxyz(double w, double x, double y, double z);
  static UnitQuaternion from_wxyz(const std::array<double, 4>& wxyz) {
    return from_wxyz(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  }
  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  /// exp map: axis * angle.
  static UnitQuaternion from_rotation_vector(const Vec3& rotvec);
  static UnitQuaternion from_matrix(const Mat3& m);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  std::array<double, 4> wxyz() const { return {w_, x_, y_, z_}; }

  UnitQuaternion canonical() const;
  UnitQuaternion operator-() const { return UnitQuaternion(-w_, -x_, -y_, -z_, RawTag{}); }

  /// Rotation angle in [0, pi].
  double angle() const;
  /// Unit rotation axis; +x for the identity.
  Vec3 axis() const;
  /// log map, angle in [0, pi].
  Vec3 rotation_vector() const;
  Mat3 matrix() const;

  double dot(const UnitQuaternion& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

 private:
  struct RawTag {};
  UnitQuaternion(double w, double x, double y, double z, RawTag) : w_(w), x_(x), y_(y), z_(z) {}
  friend UnitQuaternion compose(const UnitQuaternion& a, const UnitQuaternion& b);
  friend UnitQuaternion inverse(const UnitQuaternion& q);

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// a ∘ b: rotate by b first, then by a.
UnitQuaternion compose(const UnitQuaternion& a, const UnitQuaternion& b);
inline UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) { return compose(a, b); }
UnitQuaternion inverse(const UnitQuaternion& q);
Vec3 apply(const UnitQuaternion& q, const Vec3& v);
UnitQuaternion canonicalize(const UnitQuaternion& q);

/// Geodesic distance on SO(3), 2·acos(|<a,b>|), evaluated in the
/// numerically stable atan2 form.
double geodesic_angle(const UnitQuaternion& a, const UnitQuaternion& b);

/// Moves from q_from toward q_to along the shorter great arc; the result lies
/// at eta * geodesic_angle(q_from, q_to) from q_from.
UnitQuaternion slerp(const UnitQuaternion& q_from, const UnitQuaternion& q_to, double eta);

bool approx_equal(const UnitQuaternion& a, const UnitQuaternion& b, double angle_tol);

UnitQuaternion rot_x(double angle);
UnitQuaternion rot_y(double angle);
UnitQuaternion rot_z(double angle);

Vec3 random_unit_vector(Rng& rng);

/// Uniform on SO(3) via Shoemake's subgroup algorithm (three uniforms mapped
/// onto S^3). Returned canonicalized.
UnitQuaternion sample_uniform(Rng& rng);

/// Uniform random axis, angle ~ U[0, max_angle). max_angle = 0 gives the
/// identity; max_angle outside [0, pi] throws.
UnitQuaternion sample_bounded(Rng& rng, double max_angle);

/// Rigid transform x -> R x + t.
struct Pose {
  UnitQuaternion rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {UnitQuaternion{}, t}; }

  Vec3 apply(const Vec3& p) const { return kitnet::apply(rotation, p) + translation; }
  Pose inverse() const;
  /// Layout (w, x, y, z, tx, ty, tz).
  std::array<double, 7> to_array() const;
  static Pose from_array(const std::array<double, 7>& a);
};

/// a ∘ b.
Pose compose(const Pose& a, const Pose& b);

/// Applies `delta` about a world-frame pivot: x -> delta (x - pivot) + pivot.
Pose rotate_about(const Pose& pose, const UnitQuaternion& delta, const Vec3& pivot);

}  // namespace kitnet
