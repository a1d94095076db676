#pragma once

#include <optional>
#include <vector>

#include "rocket/nlp.hpp"
#include "rocket/types.hpp"

namespace rocket::guidance {

enum class Phase { kAscent, kDescent };

struct GuidanceParams {
  double mass = 1.16;              // kg
  Vec3 gravity{-kGravity, 0, 0};   // world, x up
  double lambda1 = 0.1;            // thrust-rate effort weight
  double lambda2 = 100.0;          // speed-slack penalty weight
  double p_tol = 0.2;              // terminal position ball radius, m
  double v_tol = 0.2;              // terminal velocity ball radius, m/s
  double glide_slope = deg2rad(30.0);  // half angle of the position cone
  double tilt_max = deg2rad(30.0);     // max thrust tilt from vertical
  double v_max = 3.0;              // soft speed limit, m/s
  double thrust_min = 2.0;         // N
  double thrust_max = 18.0;        // N
  double thrust_rate_min = 0.0;    // N/s, <= 0 disables the lower rate bound
  double thrust_rate_max = 40.0;   // N/s
  double tf_min = 1.0;             // s
  double tf_max = 30.0;            // s
  int num_nodes = 30;              // trajectory knots
  Phase phase = Phase::kAscent;

  /// Throws std::invalid_argument on inconsistent ranges.
  void validate() const;
};

/// State of the vehicle at the moment the trajectory starts.
struct BoundaryState {
  Vec3 p0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  Vec3 t0 = Vec3::Zero();  // current thrust vector, N
};

struct GuidanceTarget {
  Vec3 p_f = Vec3::Zero();
  Vec3 v_f = Vec3::Zero();
};

struct GuidanceKnot {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 thrust = Vec3::Zero();
  Vec3 thrust_rate = Vec3::Zero();
  double slack = 0.0;
};

struct GuidanceSolution {
  double t_f = 0.0;
  std::vector<GuidanceKnot> knots;
  Phase phase = Phase::kAscent;
  BoundaryState boundary;
  GuidanceTarget target;
  nlp::SolveReport report;
};

struct GuidanceResult {
  bool converged = false;
  GuidanceSolution solution;  // report always filled; knots only when converged
};

/// Variable and constraint-row bookkeeping of the transcription, exposed so
/// tests can poke individual blocks.
struct TranscriptionLayout {
  int num_nodes = 0;
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;
  int terminal_pos_row = 0;
  int terminal_vel_row = 1;
  int cone_start = 2;
  int num_cone_rows = 0;
  int speed_start = 0;
  int thrust_hi_start = 0;
  int thrust_lo_start = -1;  // -1 when the lower bound is disabled
  int tilt_start = 0;
  int rate_hi_start = 0;
  int rate_lo_start = -1;

  static int idx_tf() { return 0; }
  int idx_p(int k) const { return 1 + 13 * k; }
  int idx_v(int k) const { return 1 + 13 * k + 3; }
  int idx_thrust(int k) const { return 1 + 13 * k + 6; }
  int idx_rate(int k) const { return 1 + 13 * k + 9; }
  int idx_slack(int k) const { return 1 + 13 * k + 12; }
};

struct Transcription {
  nlp::NlpProblem problem;
  TranscriptionLayout layout;
};

/// Free-final-time minimum-fuel transfer transcribed on a pseudo-time grid
/// with forward Euler, thrust rate as the control, and the final time as the
/// first decision variable. Norm expressions carry tiny smoothing epsilons
/// so every row stays differentiable on the cone axis and at zero thrust.
/// The smoothed cone, tilt, and terminal-ball rows are slightly stricter
/// than the true constraints (the cone by well under a millimeter, the balls
/// by under 1e-12), so accepted solutions satisfy the true constraints. The
/// exceptions are the norm lower bounds (relaxed by less than 1e-12) and the
/// cone rows at the two knots the boundary pins, which sit exactly on the
/// true cone at its apex and are relaxed by under a tenth of a millimeter
/// elsewhere; the independent audit still checks the true cone everywhere.
Transcription transcribe(const BoundaryState& boundary,
                         const GuidanceTarget& target,
                         const GuidanceParams& params);

GuidanceResult solve_guidance(const BoundaryState& boundary,
                              const GuidanceTarget& target,
                              const GuidanceParams& params,
                              const nlp::SqpOptions& options = {});

/// Piecewise-linear interpolation of the knot states; clamps to the first /
/// last knot outside [0, t_f].
std::pair<Vec3, Vec3> sample(const GuidanceSolution& traj, double t);

enum class ReplanReason {
  kNone,
  kPreTakeoff,
  kNearEnd,
  kTrackingError,
  kTargetChanged,
};

struct ReplanThresholds {
  double near_end_fraction = 0.9;
  double tracking_error_m = 0.5;
};

/// Decide whether a new guidance solve is needed. `active` may be null
/// (nothing solved yet), `t` is time since the active trajectory started.
ReplanReason replan_needed(const GuidanceSolution* active, double t,
                           const Vec3& p_est, const GuidanceTarget& requested,
                           const ReplanThresholds& thresholds);

/// Violation summary of a solution against the original nonsmooth
/// constraints. Implemented independently of the transcription so it can
/// serve as an audit of converged solutions.
struct FeasibilityReport {
  double initial_state_error = 0;
  double dynamics_defect = 0;
  double terminal_position_miss = 0;  // beyond the tolerance ball
  double terminal_velocity_miss = 0;
  double cone_violation = 0;
  double speed_violation = 0;
  double slack_negativity = 0;
  double thrust_bound_violation = 0;
  double thrust_rate_violation = 0;
  double tilt_violation = 0;
  double tf_bound_violation = 0;
  double resimulation_drift = 0;  // accumulated Euler re-rollout mismatch

  double max_violation() const;
};

FeasibilityReport audit(const GuidanceSolution& sol,
                        const GuidanceParams& params);

}  // namespace rocket::guidance
