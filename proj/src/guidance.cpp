#include "rocket/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rocket::guidance {

namespace {

constexpr double kThrustEps = 1e-6;  // N, smooths ||T|| at the origin
// Lateral smoothing of the glide-slope cone. The smoothed row is stricter
// than the true cone by at most tan(gamma) * kConeEps, about 0.06 mm at the
// default slope, and in exchange its gradient and curvature stay bounded on
// the cone axis where trajectories routinely sit.
constexpr double kConeEps = 1e-4;  // m
// Smoothing of the terminal-ball norms. Writing the balls as norm rows keeps
// the active-constraint gradient near unit magnitude however small the ball
// is; the quadratic form's gradient shrinks with the radius and starves the
// multipliers. Tightens each ball by under 1e-12.
constexpr double kBallEps = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

double smooth_norm(const Vec3& v, double eps) {
  return std::sqrt(v.squaredNorm() + eps * eps);
}

}  // namespace

void GuidanceParams::validate() const {
  if (!(mass > 0)) {
    throw std::invalid_argument("guidance: mass must be positive");
  }
  if (!(p_tol > 0) || !(v_tol > 0)) {
    throw std::invalid_argument("guidance: terminal tolerances must be positive");
  }
  if (!(v_max > 0)) {
    throw std::invalid_argument("guidance: speed limit must be positive");
  }
  if (thrust_max < thrust_min || thrust_min < 0) {
    throw std::invalid_argument("guidance: thrust bounds are inconsistent");
  }
  if (!(thrust_rate_max > 0)) {
    throw std::invalid_argument("guidance: thrust rate bound must be positive");
  }
  if (!(tf_max >= tf_min) || !(tf_min > 0)) {
    throw std::invalid_argument("guidance: final-time bounds are inconsistent");
  }
  if (glide_slope < 0 || glide_slope >= kPi / 2) {
    throw std::invalid_argument("guidance: glide slope outside [0, pi/2)");
  }
  if (tilt_max <= 0 || tilt_max > kPi / 2) {
    throw std::invalid_argument("guidance: tilt limit outside (0, pi/2]");
  }
  if (num_nodes < 2) {
    throw std::invalid_argument("guidance: need at least two nodes");
  }
  if (lambda1 < 0 || lambda2 < 0) {
    throw std::invalid_argument("guidance: weights must be nonnegative");
  }
}

Transcription transcribe(const BoundaryState& boundary,
                         const GuidanceTarget& target,
                         const GuidanceParams& prm) {
  prm.validate();
  const int K = prm.num_nodes;
  const double h = 1.0 / (K - 1);
  const bool rate_lo = prm.thrust_rate_min > 0;
  const bool thrust_lo = prm.thrust_min > 0;

  Transcription tr;
  TranscriptionLayout& L = tr.layout;
  L.num_nodes = K;
  L.num_vars = 1 + 13 * K;
  L.num_eq = 9 + 9 * (K - 1);
  L.num_cone_rows = K - 1;  // pinned first knot is excluded
  L.speed_start = L.cone_start + L.num_cone_rows;
  L.thrust_hi_start = L.speed_start + K;
  int row = L.thrust_hi_start + K;
  if (thrust_lo) {
    L.thrust_lo_start = row;
    row += K;
  }
  L.tilt_start = row;
  row += K;
  L.rate_hi_start = row;
  row += K;
  if (rate_lo) {
    L.rate_lo_start = row;
    row += K;
  }
  L.num_ineq = row;

  nlp::NlpProblem& p = tr.problem;
  p.num_vars = L.num_vars;
  p.num_eq = L.num_eq;
  p.num_ineq = L.num_ineq;

  const double mass = prm.mass;
  const Vec3 grav = prm.gravity;
  const double lam1 = prm.lambda1;
  const double lam2 = prm.lambda2;
  const Vec3 cone_anchor =
      prm.phase == Phase::kAscent ? boundary.p0 : target.p_f;
  const double tan_gs = std::tan(prm.glide_slope);
  const double cos_tilt = std::cos(prm.tilt_max);

  p.cost = [L, K, h, lam1, lam2](const VecX& z, VecX* grad) {
    const double tf = z(TranscriptionLayout::idx_tf());
    double per_time = 0.0;  // running cost per unit of flight time
    if (grad) {
      grad->setZero();
    }
    for (int k = 0; k < K; ++k) {
      const Vec3 T = z.segment<3>(L.idx_thrust(k));
      const Vec3 Td = z.segment<3>(L.idx_rate(k));
      const double eta = z(L.idx_slack(k));
      const double s = smooth_norm(T, kThrustEps);
      per_time += s + lam1 * Td.squaredNorm() + lam2 * eta * eta;
      if (grad) {
        grad->segment<3>(L.idx_thrust(k)) = (tf * h / s) * T;
        grad->segment<3>(L.idx_rate(k)) = (2.0 * lam1 * tf * h) * Td;
        (*grad)(L.idx_slack(k)) = 2.0 * lam2 * tf * h * eta;
      }
    }
    if (grad) {
      (*grad)(TranscriptionLayout::idx_tf()) = per_time * h;
    }
    return per_time * tf * h;
  };

  const double tan_gs_h = std::tan(prm.glide_slope);
  const double cos_tilt_h = std::cos(prm.tilt_max);
  const double mass_h = prm.mass;
  const Vec3 anchor_h = cone_anchor;
  const Vec3 pf_h = target.p_f;
  const Vec3 vf_h = target.v_f;

  p.lagrangian_hessian = [L, K, h, lam1, lam2, mass_h, anchor_h, tan_gs_h,
                          cos_tilt_h, pf_h, vf_h](
                             const VecX& z, const VecX& lambda, const VecX& mu,
                             MatX& hess) {
    const double tf = z(TranscriptionLayout::idx_tf());
    const int i_tf = TranscriptionLayout::idx_tf();
    hess = MatX::Zero(L.num_vars, L.num_vars);

    auto add_sym = [&hess](int row, int col, double v) {
      hess(row, col) += v;
      hess(col, row) += v;
    };

    for (int k = 0; k < K; ++k) {
      const Vec3 T = z.segment<3>(L.idx_thrust(k));
      const Vec3 Td = z.segment<3>(L.idx_rate(k));
      const double eta = z(L.idx_slack(k));
      const double s = smooth_norm(T, kThrustEps);
      const Mat3 proj = Mat3::Identity() / s - T * T.transpose() / (s * s * s);

      hess.block<3, 3>(L.idx_thrust(k), L.idx_thrust(k)) = (tf * h) * proj;
      hess.block<3, 3>(L.idx_rate(k), L.idx_rate(k)) =
          (2.0 * lam1 * tf * h) * Mat3::Identity();
      hess(L.idx_slack(k), L.idx_slack(k)) = 2.0 * lam2 * tf * h;
      for (int i = 0; i < 3; ++i) {
        add_sym(i_tf, L.idx_thrust(k) + i, h * T(i) / s);
        add_sym(i_tf, L.idx_rate(k) + i, 2.0 * lam1 * h * Td(i));
      }
      add_sym(i_tf, L.idx_slack(k), 2.0 * lam2 * h * eta);
    }

    // Dynamics rows are bilinear in t_f and the stage variables; their
    // multiplier-weighted curvature is a set of t_f cross terms.
    for (int k = 0; k + 1 < K; ++k) {
      const int row = 9 + 9 * k;
      for (int i = 0; i < 3; ++i) {
        add_sym(i_tf, L.idx_v(k) + i, h * lambda(row + i));
        add_sym(i_tf, L.idx_thrust(k) + i, (h / mass_h) * lambda(row + 3 + i));
        add_sym(i_tf, L.idx_rate(k) + i, h * lambda(row + 6 + i));
      }
    }

    const auto ball_curvature = [](const Vec3& d) -> Mat3 {
      const double n2 = d.squaredNorm() + kBallEps * kBallEps;
      const double n = std::sqrt(n2);
      return (Mat3::Identity() - d * d.transpose() / n2) / n;
    };
    hess.block<3, 3>(L.idx_p(K - 1), L.idx_p(K - 1)) +=
        mu(L.terminal_pos_row) *
        ball_curvature(z.segment<3>(L.idx_p(K - 1)) - pf_h);
    hess.block<3, 3>(L.idx_v(K - 1), L.idx_v(K - 1)) +=
        mu(L.terminal_vel_row) *
        ball_curvature(z.segment<3>(L.idx_v(K - 1)) - vf_h);

    for (int k = 1; k < K; ++k) {
      const double m_cone = mu(L.cone_start + (k - 1));
      if (m_cone == 0.0) {
        continue;
      }
      const Vec3 d = z.segment<3>(L.idx_p(k)) - anchor_h;
      const double lat2 =
          d.y() * d.y() + d.z() * d.z() + kConeEps * kConeEps;
      const double lat = std::sqrt(lat2);
      Eigen::Matrix2d hl;
      hl << 1.0 - d.y() * d.y() / lat2, -d.y() * d.z() / lat2,
          -d.y() * d.z() / lat2, 1.0 - d.z() * d.z() / lat2;
      hess.block<2, 2>(L.idx_p(k) + 1, L.idx_p(k) + 1) +=
          (m_cone * tan_gs_h / lat) * hl;
    }

    for (int k = 0; k < K; ++k) {
      const double m_speed = mu(L.speed_start + k);
      hess.block<3, 3>(L.idx_v(k), L.idx_v(k)) +=
          2.0 * m_speed * Mat3::Identity();
      hess(L.idx_slack(k), L.idx_slack(k)) -= 2.0 * m_speed;

      const Vec3 T = z.segment<3>(L.idx_thrust(k));
      const double s = smooth_norm(T, kThrustEps);
      const Mat3 proj = Mat3::Identity() / s - T * T.transpose() / (s * s * s);
      double shell = cos_tilt_h * mu(L.tilt_start + k);
      if (L.thrust_lo_start >= 0) {
        shell -= mu(L.thrust_lo_start + k);
      }
      hess.block<3, 3>(L.idx_thrust(k), L.idx_thrust(k)) +=
          2.0 * mu(L.thrust_hi_start + k) * Mat3::Identity() + shell * proj;

      const Vec3 Td = z.segment<3>(L.idx_rate(k));
      hess.block<3, 3>(L.idx_rate(k), L.idx_rate(k)) +=
          2.0 * mu(L.rate_hi_start + k) * Mat3::Identity();
      if (L.rate_lo_start >= 0) {
        const double sd = smooth_norm(Td, kThrustEps);
        hess.block<3, 3>(L.idx_rate(k), L.idx_rate(k)) -=
            (mu(L.rate_lo_start + k) / sd) *
            (Mat3::Identity() - Td * Td.transpose() / (sd * sd));
      }
    }
  };

  const Vec3 p0 = boundary.p0;
  const Vec3 v0 = boundary.v0;
  const Vec3 t0 = boundary.t0;

  p.equality = [L, K, h, mass, grav, p0, v0, t0](const VecX& z, VecX& r,
                                                 MatX* jac) {
    const double tf = z(TranscriptionLayout::idx_tf());
    const double tau = h * tf;
    if (jac) {
      jac->setZero();
    }
    r.segment<3>(0) = z.segment<3>(L.idx_p(0)) - p0;
    r.segment<3>(3) = z.segment<3>(L.idx_v(0)) - v0;
    r.segment<3>(6) = z.segment<3>(L.idx_thrust(0)) - t0;
    if (jac) {
      jac->block<3, 3>(0, L.idx_p(0)).setIdentity();
      jac->block<3, 3>(3, L.idx_v(0)).setIdentity();
      jac->block<3, 3>(6, L.idx_thrust(0)).setIdentity();
    }
    for (int k = 0; k + 1 < K; ++k) {
      const int row = 9 + 9 * k;
      const Vec3 v_k = z.segment<3>(L.idx_v(k));
      const Vec3 T_k = z.segment<3>(L.idx_thrust(k));
      const Vec3 Td_k = z.segment<3>(L.idx_rate(k));
      const Vec3 acc = T_k / mass + grav;
      r.segment<3>(row + 0) =
          z.segment<3>(L.idx_p(k + 1)) - z.segment<3>(L.idx_p(k)) - tau * v_k;
      r.segment<3>(row + 3) =
          z.segment<3>(L.idx_v(k + 1)) - v_k - tau * acc;
      r.segment<3>(row + 6) =
          z.segment<3>(L.idx_thrust(k + 1)) - T_k - tau * Td_k;
      if (jac) {
        jac->block<3, 3>(row + 0, L.idx_p(k + 1)).setIdentity();
        jac->block<3, 3>(row + 0, L.idx_p(k)) = -Mat3::Identity();
        jac->block<3, 3>(row + 0, L.idx_v(k)) = -tau * Mat3::Identity();
        jac->block<3, 1>(row + 0, TranscriptionLayout::idx_tf()) = -h * v_k;

        jac->block<3, 3>(row + 3, L.idx_v(k + 1)).setIdentity();
        jac->block<3, 3>(row + 3, L.idx_v(k)) = -Mat3::Identity();
        jac->block<3, 3>(row + 3, L.idx_thrust(k)) =
            -(tau / mass) * Mat3::Identity();
        jac->block<3, 1>(row + 3, TranscriptionLayout::idx_tf()) = -h * acc;

        jac->block<3, 3>(row + 6, L.idx_thrust(k + 1)).setIdentity();
        jac->block<3, 3>(row + 6, L.idx_thrust(k)) = -Mat3::Identity();
        jac->block<3, 3>(row + 6, L.idx_rate(k)) = -tau * Mat3::Identity();
        jac->block<3, 1>(row + 6, TranscriptionLayout::idx_tf()) = -h * Td_k;
      }
    }
  };

  const Vec3 p_f = target.p_f;
  const Vec3 v_f = target.v_f;
  const double p_tol = prm.p_tol;
  const double v_tol = prm.v_tol;
  const double v_max = prm.v_max;
  const double t_max2 = prm.thrust_max * prm.thrust_max;
  const double t_min = prm.thrust_min;
  const double td_max2 = prm.thrust_rate_max * prm.thrust_rate_max;
  const double td_min = prm.thrust_rate_min;

  p.inequality = [=](const VecX& z, VecX& r, MatX* jac) {
    if (jac) {
      jac->setZero();
    }
    {
      const Vec3 dp = z.segment<3>(L.idx_p(K - 1)) - p_f;
      const double np = std::sqrt(dp.squaredNorm() + kBallEps * kBallEps);
      r(L.terminal_pos_row) = p_tol - np;
      const Vec3 dv = z.segment<3>(L.idx_v(K - 1)) - v_f;
      const double nv = std::sqrt(dv.squaredNorm() + kBallEps * kBallEps);
      r(L.terminal_vel_row) = v_tol - nv;
      if (jac) {
        jac->block<1, 3>(L.terminal_pos_row, L.idx_p(K - 1)) =
            -dp.transpose() / np;
        jac->block<1, 3>(L.terminal_vel_row, L.idx_v(K - 1)) =
            -dv.transpose() / nv;
      }
    }
    // The smoothed cone row at the first two knots is shifted back onto the
    // true cone at the apex. Those knots follow from the pinned boundary and
    // tf alone (p1 = p0 + t*v0, p2 = p0 + 2t*v0 + t^2*(T0/m + g)), so the
    // epsilon-strict form would let the smoothing margin dictate tf when a
    // flight starts at rest on the cone axis. The shift relaxes those two
    // rows by at most tan(gamma) * kConeEps off-axis; the solution audit
    // still checks the true cone at every knot.
    for (int k = 1; k < K; ++k) {
      const int row = L.cone_start + (k - 1);
      const Vec3 d = z.segment<3>(L.idx_p(k)) - cone_anchor;
      const double lat = std::sqrt(d.y() * d.y() + d.z() * d.z() +
                                   kConeEps * kConeEps);
      const double apex_shift = k <= 2 ? tan_gs * kConeEps : 0.0;
      r(row) = d.x() - tan_gs * lat + apex_shift;
      if (jac) {
        (*jac)(row, L.idx_p(k) + 0) = 1.0;
        (*jac)(row, L.idx_p(k) + 1) = -tan_gs * d.y() / lat;
        (*jac)(row, L.idx_p(k) + 2) = -tan_gs * d.z() / lat;
      }
    }
    for (int k = 0; k < K; ++k) {
      const Vec3 v = z.segment<3>(L.idx_v(k));
      const double eta = z(L.idx_slack(k));
      const double cap = v_max + eta;
      r(L.speed_start + k) = cap * cap - v.squaredNorm();
      if (jac) {
        jac->block<1, 3>(L.speed_start + k, L.idx_v(k)) = -2.0 * v.transpose();
        (*jac)(L.speed_start + k, L.idx_slack(k)) = 2.0 * cap;
      }

      const Vec3 T = z.segment<3>(L.idx_thrust(k));
      r(L.thrust_hi_start + k) = t_max2 - T.squaredNorm();
      if (jac) {
        jac->block<1, 3>(L.thrust_hi_start + k, L.idx_thrust(k)) =
            -2.0 * T.transpose();
      }
      const double s = smooth_norm(T, kThrustEps);
      if (L.thrust_lo_start >= 0) {
        r(L.thrust_lo_start + k) = s - t_min;
        if (jac) {
          jac->block<1, 3>(L.thrust_lo_start + k, L.idx_thrust(k)) =
              T.transpose() / s;
        }
      }
      r(L.tilt_start + k) = T.x() - cos_tilt * s;
      if (jac) {
        jac->block<1, 3>(L.tilt_start + k, L.idx_thrust(k)) =
            -(cos_tilt / s) * T.transpose();
        (*jac)(L.tilt_start + k, L.idx_thrust(k) + 0) += 1.0;
      }

      const Vec3 Td = z.segment<3>(L.idx_rate(k));
      r(L.rate_hi_start + k) = td_max2 - Td.squaredNorm();
      if (jac) {
        jac->block<1, 3>(L.rate_hi_start + k, L.idx_rate(k)) =
            -2.0 * Td.transpose();
      }
      if (L.rate_lo_start >= 0) {
        const double sd = smooth_norm(Td, kThrustEps);
        r(L.rate_lo_start + k) = sd - td_min;
        if (jac) {
          jac->block<1, 3>(L.rate_lo_start + k, L.idx_rate(k)) =
              Td.transpose() / sd;
        }
      }
    }
  };

  p.lower_bounds = VecX::Constant(L.num_vars, -kInf);
  p.upper_bounds = VecX::Constant(L.num_vars, kInf);
  p.lower_bounds(TranscriptionLayout::idx_tf()) = prm.tf_min;
  p.upper_bounds(TranscriptionLayout::idx_tf()) = prm.tf_max;
  for (int k = 0; k < K; ++k) {
    p.lower_bounds(L.idx_slack(k)) = 0.0;
  }

  // Straight-line warm start at hover thrust.
  const double dist = (target.p_f - boundary.p0).norm();
  const double tf0 =
      std::clamp(dist / (0.5 * prm.v_max), prm.tf_min, prm.tf_max);
  const Vec3 hover(mass * -grav.x(), 0, 0);
  VecX z0 = VecX::Zero(L.num_vars);
  z0(TranscriptionLayout::idx_tf()) = tf0;
  for (int k = 0; k < K; ++k) {
    const double sigma = k * h;
    z0.segment<3>(L.idx_p(k)) = boundary.p0 + sigma * (target.p_f - boundary.p0);
    z0.segment<3>(L.idx_v(k)) = (target.p_f - boundary.p0) / tf0;
    z0.segment<3>(L.idx_thrust(k)) = hover;
  }
  p.initial_guess = z0;

  return tr;
}

GuidanceResult solve_guidance(const BoundaryState& boundary,
                              const GuidanceTarget& target,
                              const GuidanceParams& prm,
                              const nlp::SqpOptions& options) {
  GuidanceResult out;
  out.solution.phase = prm.phase;
  out.solution.boundary = boundary;
  out.solution.target = target;

  if (prm.phase == Phase::kDescent) {
    // The first knot is pinned, so a start outside the landing cone can
    // never become feasible; fail fast instead of burning iterations.
    const Vec3 d = boundary.p0 - target.p_f;
    const double lat = std::hypot(d.y(), d.z());
    if (d.x() < std::tan(prm.glide_slope) * lat - 1e-9) {
      out.solution.report.status = nlp::SolveStatus::kInfeasibleQp;
      out.solution.report.constraint_violation =
          std::tan(prm.glide_slope) * lat - d.x();
      return out;
    }
  }

  Transcription tr = transcribe(boundary, target, prm);
  nlp::SolveResult res = solve_nlp(tr.problem, options);
  out.solution.report = res.report;
  if (res.report.status != nlp::SolveStatus::kConverged) {
    return out;
  }

  const TranscriptionLayout& L = tr.layout;
  out.solution.t_f = res.z(TranscriptionLayout::idx_tf());
  out.solution.knots.resize(L.num_nodes);
  for (int k = 0; k < L.num_nodes; ++k) {
    GuidanceKnot& knot = out.solution.knots[k];
    knot.p = res.z.segment<3>(L.idx_p(k));
    knot.v = res.z.segment<3>(L.idx_v(k));
    knot.thrust = res.z.segment<3>(L.idx_thrust(k));
    knot.thrust_rate = res.z.segment<3>(L.idx_rate(k));
    knot.slack = res.z(L.idx_slack(k));
  }

  // A converged flag is only honest if the unsmoothed constraints hold too.
  const FeasibilityReport fr = audit(out.solution, prm);
  if (fr.max_violation() > options.tol_feas) {
    out.solution.report.status = nlp::SolveStatus::kNumericalFailure;
    out.solution.report.constraint_violation = fr.max_violation();
    return out;
  }
  out.converged = true;
  return out;
}

std::pair<Vec3, Vec3> sample(const GuidanceSolution& traj, double t) {
  if (traj.knots.empty()) {
    throw std::invalid_argument("sample: trajectory has no knots");
  }
  const int K = static_cast<int>(traj.knots.size());
  if (t <= 0.0) {
    return {traj.knots.front().p, traj.knots.front().v};
  }
  if (t >= traj.t_f) {
    return {traj.knots.back().p, traj.knots.back().v};
  }
  const double sigma = t / traj.t_f * (K - 1);
  const int k = std::min(static_cast<int>(sigma), K - 2);
  const double a = sigma - k;
  const Vec3 p = (1 - a) * traj.knots[k].p + a * traj.knots[k + 1].p;
  const Vec3 v = (1 - a) * traj.knots[k].v + a * traj.knots[k + 1].v;
  return {p, v};
}

ReplanReason replan_needed(const GuidanceSolution* active, double t,
                           const Vec3& p_est, const GuidanceTarget& requested,
                           const ReplanThresholds& thresholds) {
  if (active == nullptr || active->knots.empty()) {
    return ReplanReason::kPreTakeoff;
  }
  if ((requested.p_f - active->target.p_f).norm() > 1e-9 ||
      (requested.v_f - active->target.v_f).norm() > 1e-9) {
    return ReplanReason::kTargetChanged;
  }
  const auto [p_ref, v_ref] = sample(*active, t);
  (void)v_ref;
  if ((p_est - p_ref).norm() > thresholds.tracking_error_m) {
    return ReplanReason::kTrackingError;
  }
  if (t > thresholds.near_end_fraction * active->t_f) {
    return ReplanReason::kNearEnd;
  }
  return ReplanReason::kNone;
}

}  // namespace rocket::guidance
