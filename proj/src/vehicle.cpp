#include "rocket/vehicle.hpp"

#include <cmath>
#include <stdexcept>

namespace rocket::vehicle {

StateVec VehicleState::flatten() const {
  StateVec x;
  x << p, v, q.coeffs(), omega, thrust;
  return x;
}

VehicleState VehicleState::unflatten(const StateVec& x) {
  VehicleState s;
  s.p = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.q = {x(6), x(7), x(8), x(9)};
  s.omega = x.segment<3>(10);
  s.thrust = x.segment<3>(13);
  return s;
}

DisturbVec DisturbanceVector::flatten() const {
  DisturbVec w;
  w << dv, da, dalpha;
  return w;
}

DisturbanceVector DisturbanceVector::unflatten(const DisturbVec& w) {
  DisturbanceVector d;
  d.dv = w.segment<3>(0);
  d.da = w.segment<3>(3);
  d.dalpha = w.segment<3>(6);
  return d;
}

VehicleParams VehicleParams::make(double mass, const Mat3& inertia, double r_g,
                                  double thrust_tau, const Vec3& gravity) {
  if (!(mass > 0)) {
    throw std::invalid_argument("vehicle mass must be positive");
  }
  if (!(r_g > 0)) {
    throw std::invalid_argument("hinge-to-CoG distance must be positive");
  }
  if (!(thrust_tau > 0)) {
    throw std::invalid_argument("thrust time constant must be positive");
  }
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("inertia tensor must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0) {
    throw std::invalid_argument("inertia tensor must be positive definite");
  }
  VehicleParams p;
  p.mass = mass;
  p.gravity = gravity;
  p.inertia = inertia;
  p.inertia_inv = inertia.inverse();
  p.r_g = r_g;
  p.thrust_tau = thrust_tau;
  return p;
}

Eigen::Matrix<double, kStateDim, kDisturbanceDim>
VehicleParams::disturbance_matrix() const {
  Eigen::Matrix<double, kStateDim, kDisturbanceDim> b =
      Eigen::Matrix<double, kStateDim, kDisturbanceDim>::Zero();
  b.block<3, 3>(0, 0) = Mat3::Identity();   // dv -> pdot
  b.block<3, 3>(3, 3) = Mat3::Identity();   // da -> vdot
  b.block<3, 3>(10, 6) = Mat3::Identity();  // dalpha -> omegadot
  return b;
}

namespace detail {

// Core derivative without the quaternion-norm precondition; RK4 stage states
// drift off the unit sphere by O(dt^2) and must still evaluate. R(q) is taken
// from the renormalized quaternion, the kinematics row uses q as-is.
StateVec deriv_raw(const StateVec& x, const Vec3& u, const DisturbVec& w,
                   const VehicleParams& prm) {
  const Vec3 v = x.segment<3>(3);
  const Vec4 q = x.segment<4>(6);
  const Vec3 omega = x.segment<3>(10);
  const Vec3 thrust = x.segment<3>(13);

  const double qn = q.norm();
  const quat::UnitQuaternion qu{q(0) / qn, q(1) / qn, q(2) / qn, q(3) / qn};
  const Mat3 r = quat::rotmat(qu);

  const Vec3 r_cog(prm.r_g, 0, 0);
  const Vec3 torque = thrust.cross(r_cog) - omega.cross(prm.inertia * omega);

  StateVec xdot;
  xdot.segment<3>(0) = v + w.segment<3>(0);
  xdot.segment<3>(3) = r * thrust / prm.mass + prm.gravity + w.segment<3>(3);
  xdot.segment<4>(6) = 0.5 * quat::omega_matrix(omega) * q;
  xdot.segment<3>(10) = prm.inertia_inv * torque + w.segment<3>(6);
  xdot.segment<3>(13) = (u - thrust) / prm.thrust_tau;
  return xdot;
}

StateVec rk4_flat(const StateVec& x, const Vec3& u, const DisturbVec& w,
                  double dt, const VehicleParams& prm) {
  const StateVec k1 = deriv_raw(x, u, w, prm);
  const StateVec k2 = deriv_raw(x + 0.5 * dt * k1, u, w, prm);
  const StateVec k3 = deriv_raw(x + 0.5 * dt * k2, u, w, prm);
  const StateVec k4 = deriv_raw(x + dt * k3, u, w, prm);
  StateVec x1 = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  x1.segment<4>(6).normalize();
  return x1;
}

}  // namespace detail

namespace {

void check_quat(const VehicleState& x) {
  if (std::abs(x.q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("state quaternion is not unit");
  }
}

}  // namespace

StateVec deriv_nominal(const VehicleState& x, const ControlInput& u,
                       const VehicleParams& params) {
  check_quat(x);
  return detail::deriv_raw(x.flatten(), u.u, DisturbVec::Zero(), params);
}

StateVec deriv_augmented(const VehicleState& x, const DisturbanceVector& w,
                         const ControlInput& u, const VehicleParams& params) {
  check_quat(x);
  return detail::deriv_raw(x.flatten(), u.u, w.flatten(), params);
}

VehicleState rk4_step(const VehicleState& x, const ControlInput& u,
                      const DisturbanceVector& w, double dt,
                      const VehicleParams& params) {
  check_quat(x);
  return VehicleState::unflatten(
      detail::rk4_flat(x.flatten(), u.u, w.flatten(), dt, params));
}

Linearization linearize(const VehicleState& x, const ControlInput& u,
                        const DisturbanceVector& w, double dt,
                        const VehicleParams& params) {
  check_quat(x);
  const StateVec x0 = x.flatten();
  const DisturbVec w0 = w.flatten();

  Linearization lin;
  for (int i = 0; i < kStateDim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0(i)));
    StateVec xp = x0, xm = x0;
    xp(i) += h;
    xm(i) -= h;
    lin.a.col(i) = (detail::rk4_flat(xp, u.u, w0, dt, params) -
                    detail::rk4_flat(xm, u.u, w0, dt, params)) /
                   (2 * h);
  }
  for (int i = 0; i < kInputDim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(u.u(i)));
    Vec3 up = u.u, um = u.u;
    up(i) += h;
    um(i) -= h;
    lin.b.col(i) = (detail::rk4_flat(x0, up, w0, dt, params) -
                    detail::rk4_flat(x0, um, w0, dt, params)) /
                   (2 * h);
  }
  for (int i = 0; i < kDisturbanceDim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(w0(i)));
    DisturbVec wp = w0, wm = w0;
    wp(i) += h;
    wm(i) -= h;
    lin.b_w.col(i) = (detail::rk4_flat(x0, u.u, wp, dt, params) -
                      detail::rk4_flat(x0, u.u, wm, dt, params)) /
                     (2 * h);
  }
  return lin;
}

}  // namespace rocket::vehicle
