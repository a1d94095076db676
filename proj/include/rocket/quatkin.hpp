#pragma once

#include "rocket/types.hpp"

namespace rocket::quat {

/// Attitude quaternion, scalar-first storage (w, x, y, z).
/// Represents the active rotation taking body-frame vectors to world frame.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static UnitQuaternion identity() { return {}; }

  /// Build from a rotation of `angle` radians about `axis` (need not be unit).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

  /// Build from raw components and normalize. Throws std::invalid_argument
  /// if the norm is too small to normalize safely.
  static UnitQuaternion from_components(double w, double x, double y, double z);

  double norm() const;
  UnitQuaternion normalized() const;
  UnitQuaternion conjugate() const { return {w, -x, -y, -z}; }

  /// Hamilton product, this ⊗ rhs.
  UnitQuaternion operator*(const UnitQuaternion& rhs) const;

  Vec4 coeffs() const { return {w, x, y, z}; }
  Vec3 vec() const { return {x, y, z}; }
};

/// Shortest-path rotation error as an axis-angle vector, |r| <= pi.
struct RotationVector {
  Vec3 r = Vec3::Zero();
};

/// Direction cosine matrix of q (body -> world).
/// Requires ||q|| = 1 within 1e-9; throws std::invalid_argument otherwise.
Mat3 rotmat(const UnitQuaternion& q);

/// 4x4 skew matrix Q(omega) such that qdot = 0.5 * Q(omega) * q
/// for scalar-first q.
Mat4 omega_matrix(const Vec3& omega);

/// Propagate q under constant body rate omega over dt by RK4 substeps of
/// at most 0.02 rad each, then renormalize.
UnitQuaternion quat_step(const UnitQuaternion& q, const Vec3& omega, double dt);

/// Rotation vector of the shortest rotation taking q to q_sp
/// (error expressed in the body frame of q).
RotationVector attitude_error(const UnitQuaternion& q, const UnitQuaternion& q_sp);

}  // namespace rocket::quat
