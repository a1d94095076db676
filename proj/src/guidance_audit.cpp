#include <algorithm>
#include <cmath>

#include "rocket/guidance.hpp"

// Checks a guidance solution against the original nonsmooth constraints,
// written without reuse of the transcription callbacks so that a bug there
// cannot hide itself here.

namespace rocket::guidance {

double FeasibilityReport::max_violation() const {
  return std::max({initial_state_error, dynamics_defect,
                   terminal_position_miss, terminal_velocity_miss,
                   cone_violation, speed_violation, slack_negativity,
                   thrust_bound_violation, thrust_rate_violation,
                   tilt_violation, tf_bound_violation, resimulation_drift});
}

FeasibilityReport audit(const GuidanceSolution& sol,
                        const GuidanceParams& prm) {
  FeasibilityReport rep;
  if (sol.knots.empty()) {
    rep.initial_state_error = std::numeric_limits<double>::infinity();
    return rep;
  }
  const int K = static_cast<int>(sol.knots.size());
  const double dt = sol.t_f / (K - 1);

  rep.initial_state_error =
      std::max({(sol.knots[0].p - sol.boundary.p0).norm(),
                (sol.knots[0].v - sol.boundary.v0).norm(),
                (sol.knots[0].thrust - sol.boundary.t0).norm()});

  for (int k = 0; k + 1 < K; ++k) {
    const GuidanceKnot& a = sol.knots[k];
    const GuidanceKnot& b = sol.knots[k + 1];
    const Vec3 acc = a.thrust / prm.mass + prm.gravity;
    const double defect =
        std::max({(b.p - a.p - dt * a.v).norm(),
                  (b.v - a.v - dt * acc).norm(),
                  (b.thrust - a.thrust - dt * a.thrust_rate).norm()});
    rep.dynamics_defect = std::max(rep.dynamics_defect, defect);
  }

  rep.terminal_position_miss =
      std::max(0.0, (sol.knots[K - 1].p - sol.target.p_f).norm() - prm.p_tol);
  rep.terminal_velocity_miss =
      std::max(0.0, (sol.knots[K - 1].v - sol.target.v_f).norm() - prm.v_tol);

  const Vec3 anchor =
      sol.phase == Phase::kAscent ? sol.boundary.p0 : sol.target.p_f;
  const double tan_gs = std::tan(prm.glide_slope);
  const double cos_tilt = std::cos(prm.tilt_max);
  for (int k = 0; k < K; ++k) {
    const GuidanceKnot& knot = sol.knots[k];
    const Vec3 d = knot.p - anchor;
    rep.cone_violation = std::max(
        rep.cone_violation, tan_gs * std::hypot(d.y(), d.z()) - d.x());
    rep.speed_violation =
        std::max(rep.speed_violation,
                 knot.v.norm() - (prm.v_max + std::max(0.0, knot.slack)));
    rep.slack_negativity = std::max(rep.slack_negativity, -knot.slack);

    const double tn = knot.thrust.norm();
    rep.thrust_bound_violation =
        std::max({rep.thrust_bound_violation, tn - prm.thrust_max,
                  prm.thrust_min - tn});
    rep.tilt_violation =
        std::max(rep.tilt_violation, cos_tilt * tn - knot.thrust.x());

    const double rn = knot.thrust_rate.norm();
    rep.thrust_rate_violation =
        std::max(rep.thrust_rate_violation, rn - prm.thrust_rate_max);
    if (prm.thrust_rate_min > 0) {
      rep.thrust_rate_violation =
          std::max(rep.thrust_rate_violation, prm.thrust_rate_min - rn);
    }
  }

  rep.tf_bound_violation =
      std::max({0.0, prm.tf_min - sol.t_f, sol.t_f - prm.tf_max});

  // Re-roll the discrete dynamics from the first knot with the stored rates;
  // any mismatch beyond roundoff accumulation means the knots are not one
  // trajectory.
  Vec3 p = sol.knots[0].p;
  Vec3 v = sol.knots[0].v;
  Vec3 T = sol.knots[0].thrust;
  for (int k = 0; k + 1 < K; ++k) {
    const Vec3 acc = T / prm.mass + prm.gravity;
    p += dt * v;
    v += dt * acc;
    T += dt * sol.knots[k].thrust_rate;
    const double drift =
        std::max({(p - sol.knots[k + 1].p).norm(),
                  (v - sol.knots[k + 1].v).norm(),
                  (T - sol.knots[k + 1].thrust).norm()});
    rep.resimulation_drift = std::max(rep.resimulation_drift, drift);
  }
  return rep;
}

}  // namespace rocket::guidance
