#pragma once

#include "rocket/quatkin.hpp"
#include "rocket/types.hpp"

namespace rocket::vehicle {

inline constexpr int kStateDim = 16;        // p(3) v(3) q(4) omega(3) T(3)
inline constexpr int kInputDim = 3;         // commanded thrust vector u
inline constexpr int kDisturbanceDim = 9;   // dv(3) da(3) dalpha(3)

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using DisturbVec = Eigen::Matrix<double, kDisturbanceDim, 1>;

/// Full rigid-body state. Position and velocity are world frame, angular
/// rate and the actuated thrust vector are body frame.
struct VehicleState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  quat::UnitQuaternion q;
  Vec3 omega = Vec3::Zero();
  Vec3 thrust = Vec3::Zero();

  StateVec flatten() const;
  static VehicleState unflatten(const StateVec& x);
};

struct ControlInput {
  Vec3 u = Vec3::Zero();  // desired body thrust vector, N
};

/// Lumped disturbance estimate: velocity offset dv (m/s), linear
/// acceleration da (m/s^2), angular acceleration dalpha (rad/s^2).
struct DisturbanceVector {
  Vec3 dv = Vec3::Zero();
  Vec3 da = Vec3::Zero();
  Vec3 dalpha = Vec3::Zero();

  DisturbVec flatten() const;
  static DisturbanceVector unflatten(const DisturbVec& w);
};

struct VehicleParams {
  double mass = 1.16;                 // kg
  Vec3 gravity{-kGravity, 0, 0};      // world frame, x up
  Mat3 inertia = Mat3::Identity();    // kg m^2, body frame
  Mat3 inertia_inv = Mat3::Identity();
  double r_g = 0.5;                   // gimbal hinge to CoG along body x, m
  double thrust_tau = 0.1;            // thrust first-order lag, s

  /// Validates and precomputes the inertia inverse.
  /// Throws std::invalid_argument on non-physical values.
  static VehicleParams make(double mass, const Mat3& inertia, double r_g,
                            double thrust_tau,
                            const Vec3& gravity = Vec3(-kGravity, 0, 0));

  /// Disturbance input matrix: dv enters the position rate, da the velocity
  /// rate, dalpha the angular rate derivative.
  Eigen::Matrix<double, kStateDim, kDisturbanceDim> disturbance_matrix() const;
};

/// Continuous-time undisturbed dynamics xdot = f(x, u).
/// Requires ||q|| = 1 within 1e-6; throws std::invalid_argument otherwise.
StateVec deriv_nominal(const VehicleState& x, const ControlInput& u,
                       const VehicleParams& params);

/// f(x, u) + B_d * w, same quaternion tolerance as deriv_nominal.
StateVec deriv_augmented(const VehicleState& x, const DisturbanceVector& w,
                         const ControlInput& u, const VehicleParams& params);

/// One RK4 step of the disturbed dynamics with u and w held constant,
/// quaternion renormalized afterwards.
VehicleState rk4_step(const VehicleState& x, const ControlInput& u,
                      const DisturbanceVector& w, double dt,
                      const VehicleParams& params);

/// Discrete-time Jacobians of rk4_step, by central differences with a
/// 1e-6 relative step.
struct Linearization {
  Eigen::Matrix<double, kStateDim, kStateDim> a;
  Eigen::Matrix<double, kStateDim, kInputDim> b;
  Eigen::Matrix<double, kStateDim, kDisturbanceDim> b_w;
};

Linearization linearize(const VehicleState& x, const ControlInput& u,
                        const DisturbanceVector& w, double dt,
                        const VehicleParams& params);

}  // namespace rocket::vehicle
