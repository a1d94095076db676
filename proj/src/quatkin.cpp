#include "rocket/quatkin.hpp"

#include <cmath>
#include <stdexcept>

namespace rocket::quat {

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-300) {
    return identity();
  }
  const Vec3 u = axis / n;
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return {std::cos(half), s * u.x(), s * u.y(), s * u.z()};
}

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) {
    throw std::invalid_argument("quaternion norm too small to normalize");
  }
  return {w / n, x / n, y / n, z / n};
}

double UnitQuaternion::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  if (n < 1e-12) {
    throw std::invalid_argument("quaternion norm too small to normalize");
  }
  return {w / n, x / n, y / n, z / n};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& r) const {
  return {w * r.w - x * r.x - y * r.y - z * r.z,
          w * r.x + x * r.w + y * r.z - z * r.y,
          w * r.y - x * r.z + y * r.w + z * r.x,
          w * r.z + x * r.y - y * r.x + z * r.w};
}

Mat3 rotmat(const UnitQuaternion& q) {
  if (std::abs(q.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("rotmat: quaternion is not unit");
  }
  const double qw = q.w, qx = q.x, qy = q.y, qz = q.z;
  Mat3 r;
  r << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
      2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
      2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy);
  return r;
}

Mat4 omega_matrix(const Vec3& w) {
  Mat4 q;
  q << 0, -w.x(), -w.y(), -w.z(),
      w.x(), 0, w.z(), -w.y(),
      w.y(), -w.z(), 0, w.x(),
      w.z(), w.y(), -w.x(), 0;
  return q;
}

namespace {

Vec4 qdot(const Mat4& omega_mat, const Vec4& q) {
  return 0.5 * omega_mat * q;
}

}  // namespace

UnitQuaternion quat_step(const UnitQuaternion& q, const Vec3& omega, double dt) {
  const double angle = omega.norm() * std::abs(dt);
  // Sub-step so each RK4 stage covers at most 0.02 rad; keeps the local
  // truncation error below 1e-12 even for large commanded steps.
  const int n_sub = std::max(1, static_cast<int>(std::ceil(angle / 0.02)));
  const double h = dt / n_sub;
  const Mat4 om = omega_matrix(omega);
  Vec4 v = q.coeffs();
  for (int i = 0; i < n_sub; ++i) {
    const Vec4 k1 = qdot(om, v);
    const Vec4 k2 = qdot(om, v + 0.5 * h * k1);
    const Vec4 k3 = qdot(om, v + 0.5 * h * k2);
    const Vec4 k4 = qdot(om, v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return UnitQuaternion::from_components(v(0), v(1), v(2), v(3));
}

RotationVector attitude_error(const UnitQuaternion& q, const UnitQuaternion& q_sp) {
  UnitQuaternion e = q.conjugate() * q_sp;
  if (e.w < 0) {  // pick the short way round
    e = {-e.w, -e.x, -e.y, -e.z};
  }
  const Vec3 v = e.vec();
  const double s = v.norm();
  RotationVector out;
  if (s < 1e-12) {
    out.r = 2.0 * v;
  } else {
    out.r = v * (2.0 * std::atan2(s, e.w) / s);
  }
  return out;
}

}  // namespace rocket::quat
