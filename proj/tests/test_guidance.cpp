#include "rocket/guidance.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "rocket/nlp.hpp"

using namespace rocket;
using namespace rocket::guidance;

namespace {

GuidanceParams default_params() { return GuidanceParams{}; }

/// Deterministic non-trivial decision vector for callback checks.
VecX probe_vector(const TranscriptionLayout& L) {
  VecX z(L.num_vars);
  z(TranscriptionLayout::idx_tf()) = 7.3;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int k = 0; k < L.num_nodes; ++k) {
    z.segment<3>(L.idx_p(k)) = Vec3(2 + 0.1 * k + d(rng), d(rng), d(rng));
    z.segment<3>(L.idx_v(k)) = Vec3(d(rng), d(rng), d(rng));
    z.segment<3>(L.idx_thrust(k)) = Vec3(11 + d(rng), d(rng), d(rng));
    z.segment<3>(L.idx_rate(k)) = Vec3(d(rng), d(rng), d(rng));
    z(L.idx_slack(k)) = 0.2 + 0.1 * d(rng);
  }
  return z;
}

GuidanceSolution solution_from(const TranscriptionLayout& L, const VecX& z,
                               const BoundaryState& b,
                               const GuidanceTarget& t, Phase phase,
                               double t_f) {
  GuidanceSolution sol;
  sol.t_f = t_f;
  sol.phase = phase;
  sol.boundary = b;
  sol.target = t;
  sol.knots.resize(L.num_nodes);
  for (int k = 0; k < L.num_nodes; ++k) {
    sol.knots[k].p = z.segment<3>(L.idx_p(k));
    sol.knots[k].v = z.segment<3>(L.idx_v(k));
    sol.knots[k].thrust = z.segment<3>(L.idx_thrust(k));
    sol.knots[k].thrust_rate = z.segment<3>(L.idx_rate(k));
    sol.knots[k].slack = z(L.idx_slack(k));
  }
  return sol;
}

}  // namespace

TEST_CASE("transcription dimensions follow the documented layout") {
  BoundaryState b;
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(10, 0, 0);
  auto prm = default_params();

  Transcription tr = transcribe(b, t, prm);
  const TranscriptionLayout& L = tr.layout;
  CHECK(L.num_nodes == 30);
  CHECK(L.num_vars == 391);  // 1 + 30 * (3 + 3 + 3 + 3 + 1)
  CHECK(L.num_eq == 270);    // 9 pins + 9 per interval
  CHECK(L.cone_start == 2);
  CHECK(L.num_cone_rows == 29);
  CHECK(L.speed_start == 31);
  CHECK(L.thrust_hi_start == 61);
  CHECK(L.thrust_lo_start == 91);
  CHECK(L.tilt_start == 121);
  CHECK(L.rate_hi_start == 151);
  CHECK(L.rate_lo_start == -1);
  CHECK(L.num_ineq == 181);
  CHECK(tr.problem.num_vars == L.num_vars);
  CHECK(tr.problem.num_eq == L.num_eq);
  CHECK(tr.problem.num_ineq == L.num_ineq);
  CHECK(tr.problem.lower_bounds(TranscriptionLayout::idx_tf()) == prm.tf_min);
  CHECK(tr.problem.upper_bounds(TranscriptionLayout::idx_tf()) == prm.tf_max);
  CHECK(tr.problem.lower_bounds(L.idx_slack(7)) == 0.0);

  SUBCASE("disabling the thrust floor drops its rows") {
    prm.thrust_min = 0.0;
    Transcription tr2 = transcribe(b, t, prm);
    CHECK(tr2.layout.thrust_lo_start == -1);
    CHECK(tr2.layout.num_ineq == 151);
  }
  SUBCASE("a positive rate floor adds rows") {
    prm.thrust_rate_min = 1.0;
    Transcription tr2 = transcribe(b, t, prm);
    CHECK(tr2.layout.rate_lo_start == 181);
    CHECK(tr2.layout.num_ineq == 211);
  }
}

TEST_CASE("invalid parameter combinations are rejected") {
  auto prm = default_params();
  prm.thrust_min = 20.0;  // above thrust_max
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = default_params();
  prm.num_nodes = 1;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = default_params();
  prm.tf_min = -1.0;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = default_params();
  prm.glide_slope = kPi / 2;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = default_params();
  prm.tilt_max = 0.0;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = default_params();
  prm.thrust_min = prm.thrust_max;  // equal bounds are allowed
  CHECK_NOTHROW(prm.validate());
  prm = default_params();
  prm.tilt_max = kPi / 2;
  CHECK_NOTHROW(prm.validate());
}

TEST_CASE("cost callback matches a direct evaluation of the integrand") {
  BoundaryState b;
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(6, 1, -2);
  auto prm = default_params();
  Transcription tr = transcribe(b, t, prm);
  const TranscriptionLayout& L = tr.layout;
  const VecX z = probe_vector(L);

  const double tf = z(TranscriptionLayout::idx_tf());
  const double h = 1.0 / (L.num_nodes - 1);
  double expected = 0;
  for (int k = 0; k < L.num_nodes; ++k) {
    const Vec3 T = z.segment<3>(L.idx_thrust(k));
    const Vec3 Td = z.segment<3>(L.idx_rate(k));
    const double eta = z(L.idx_slack(k));
    expected += std::sqrt(T.squaredNorm() + 1e-12) +
                prm.lambda1 * Td.squaredNorm() + prm.lambda2 * eta * eta;
  }
  expected *= tf * h;
  CHECK(tr.problem.cost(z, nullptr) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("callback gradients and Jacobians agree with finite differences") {
  BoundaryState b;
  b.v0 = Vec3(0.3, -0.1, 0.2);
  b.t0 = Vec3(11.0, 0.4, -0.3);
  GuidanceTarget t;
  t.p_f = Vec3(6, 1, -2);
  t.v_f = Vec3(0, 0.1, 0);
  auto prm = default_params();
  prm.thrust_rate_min = 0.05;  // exercise every row family
  Transcription tr = transcribe(b, t, prm);
  const TranscriptionLayout& L = tr.layout;
  const nlp::NlpProblem& p = tr.problem;
  const VecX z = probe_vector(L);

  VecX grad(L.num_vars);
  p.cost(z, &grad);
  VecX ce(L.num_eq), ci(L.num_ineq);
  MatX je(L.num_eq, L.num_vars), ji(L.num_ineq, L.num_vars);
  p.equality(z, ce, &je);
  p.inequality(z, ci, &ji);

  const double h = 1e-6;
  VecX ce_p(L.num_eq), ce_m(L.num_eq), ci_p(L.num_ineq), ci_m(L.num_ineq);
  double max_grad_err = 0, max_je_err = 0, max_ji_err = 0;
  for (int j = 0; j < L.num_vars; ++j) {
    VecX zp = z, zm = z;
    zp(j) += h;
    zm(j) -= h;
    max_grad_err =
        std::max(max_grad_err,
                 std::abs((p.cost(zp, nullptr) - p.cost(zm, nullptr)) / (2 * h) -
                          grad(j)));
    p.equality(zp, ce_p, nullptr);
    p.equality(zm, ce_m, nullptr);
    max_je_err = std::max(
        max_je_err, ((ce_p - ce_m) / (2 * h) - je.col(j)).cwiseAbs().maxCoeff());
    p.inequality(zp, ci_p, nullptr);
    p.inequality(zm, ci_m, nullptr);
    max_ji_err = std::max(
        max_ji_err, ((ci_p - ci_m) / (2 * h) - ji.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(max_grad_err < 1e-5);
  CHECK(max_je_err < 1e-5);
  CHECK(max_ji_err < 1e-5);
}

TEST_CASE("Lagrangian Hessian matches differentiated gradients") {
  BoundaryState b;
  b.t0 = Vec3(11.0, 0.4, -0.3);
  GuidanceTarget t;
  t.p_f = Vec3(6, 1, -2);
  auto prm = default_params();
  prm.thrust_rate_min = 0.05;
  Transcription tr = transcribe(b, t, prm);
  const TranscriptionLayout& L = tr.layout;
  const nlp::NlpProblem& p = tr.problem;
  const VecX z = probe_vector(L);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VecX lambda(L.num_eq), mu(L.num_ineq);
  for (int i = 0; i < L.num_eq; ++i) {
    lambda(i) = gauss(rng);
  }
  for (int i = 0; i < L.num_ineq; ++i) {
    mu(i) = std::abs(gauss(rng));
  }

  auto lagrangian_grad = [&](const VecX& at) {
    VecX g(L.num_vars);
    p.cost(at, &g);
    VecX ce(L.num_eq), ci(L.num_ineq);
    MatX je(L.num_eq, L.num_vars), ji(L.num_ineq, L.num_vars);
    p.equality(at, ce, &je);
    p.inequality(at, ci, &ji);
    g.noalias() -= je.transpose() * lambda;
    g.noalias() -= ji.transpose() * mu;
    return g;
  };

  MatX hess;
  p.lagrangian_hessian(z, lambda, mu, hess);
  CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  const double h = 1e-6;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    VecX u(L.num_vars);
    for (int i = 0; i < L.num_vars; ++i) {
      u(i) = gauss(rng);
    }
    u /= u.norm();
    const VecX fd = (lagrangian_grad(z + h * u) - lagrangian_grad(z - h * u)) /
                    (2 * h);
    const VecX hu = hess * u;
    worst = std::max(worst,
                     (fd - hu).cwiseAbs().maxCoeff() /
                         (1.0 + hu.cwiseAbs().maxCoeff()));
  }
  CHECK(worst < 2e-4);
}

TEST_CASE("zero glide slope turns cone rows into plain altitude gains") {
  BoundaryState b;
  b.p0 = Vec3(1, 2, 3);
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(5, -1, 0);
  auto prm = default_params();
  prm.glide_slope = 0.0;

  for (Phase phase : {Phase::kAscent, Phase::kDescent}) {
    prm.phase = phase;
    Transcription tr = transcribe(b, t, prm);
    const TranscriptionLayout& L = tr.layout;
    const VecX z = probe_vector(L);
    VecX ci(L.num_ineq);
    tr.problem.inequality(z, ci, nullptr);
    const Vec3 anchor = phase == Phase::kAscent ? b.p0 : t.p_f;
    for (int k = 1; k < L.num_nodes; ++k) {
      const double alt = z(L.idx_p(k)) - anchor.x();
      CHECK(ci(L.cone_start + k - 1) == doctest::Approx(alt).epsilon(1e-15));
    }
  }
}

TEST_CASE("audit flags each violation family independently") {
  BoundaryState b;
  b.t0 = Vec3(11.3796, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(10, 0, 0);
  auto prm = default_params();
  Transcription tr = transcribe(b, t, prm);
  const TranscriptionLayout& L = tr.layout;

  // A hover profile at the start point: dynamically consistent, but it never
  // reaches the target.
  VecX z = VecX::Zero(L.num_vars);
  z(TranscriptionLayout::idx_tf()) = 5.0;
  for (int k = 0; k < L.num_nodes; ++k) {
    z.segment<3>(L.idx_thrust(k)) = b.t0;
  }
  GuidanceSolution sol = solution_from(L, z, b, t, Phase::kAscent, 5.0);
  FeasibilityReport rep = audit(sol, prm);
  CHECK(rep.initial_state_error < 1e-9);
  CHECK(rep.dynamics_defect < 1e-3);  // hover thrust is not exactly m*g
  CHECK(rep.terminal_position_miss == doctest::Approx(10.0 - prm.p_tol));
  CHECK(rep.thrust_bound_violation == 0);
  CHECK(rep.tilt_violation == 0);

  SUBCASE("thrust outside the shell is reported") {
    sol.knots[3].thrust = Vec3(25, 0, 0);
    rep = audit(sol, prm);
    CHECK(rep.thrust_bound_violation == doctest::Approx(7.0));
    sol.knots[3].thrust = Vec3(1, 0, 0);
    rep = audit(sol, prm);
    CHECK(rep.thrust_bound_violation == doctest::Approx(1.0));
  }
  SUBCASE("tilt beyond the limit is reported") {
    sol.knots[4].thrust = Vec3(0, 11, 0);  // horizontal thrust
    rep = audit(sol, prm);
    CHECK(rep.tilt_violation == doctest::Approx(11 * std::cos(prm.tilt_max)));
  }
  SUBCASE("speed above the slack-extended limit is reported") {
    sol.knots[5].v = Vec3(4, 0, 0);
    sol.knots[5].slack = 0.5;
    rep = audit(sol, prm);
    CHECK(rep.speed_violation == doctest::Approx(0.5));
  }
  SUBCASE("negative slack is reported") {
    sol.knots[6].slack = -0.2;
    rep = audit(sol, prm);
    CHECK(rep.slack_negativity == doctest::Approx(0.2));
  }
  SUBCASE("a knot behind the ascent cone apex is reported") {
    sol.knots[7].p = Vec3(-1, 0.5, 0);
    rep = audit(sol, prm);
    const double expect = std::tan(prm.glide_slope) * 0.5 + 1.0;
    CHECK(rep.cone_violation == doctest::Approx(expect));
  }
  SUBCASE("an inconsistent knot chain is caught by the re-rollout") {
    sol.knots[8].p += Vec3(0, 0.3, 0);
    rep = audit(sol, prm);
    CHECK(rep.resimulation_drift >= 0.3);
    CHECK(rep.dynamics_defect > 0.1);
  }
  SUBCASE("final time outside its bounds is reported") {
    sol.t_f = 0.5;
    rep = audit(sol, prm);
    CHECK(rep.tf_bound_violation == doctest::Approx(0.5));
  }
}

TEST_CASE("vertical ascent converges and passes the independent audit") {
  BoundaryState b;
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(10, 0, 0);
  auto prm = default_params();

  GuidanceResult res = solve_guidance(b, t, prm);
  REQUIRE(res.converged);
  const GuidanceSolution& sol = res.solution;
  CHECK(sol.t_f > prm.tf_min);
  CHECK(sol.t_f < prm.tf_max);
  REQUIRE(sol.knots.size() == 30);

  FeasibilityReport rep = audit(sol, prm);
  CHECK(rep.max_violation() < 1e-6);

  double max_speed = 0, max_slack = 0;
  for (const auto& k : sol.knots) {
    max_speed = std::max(max_speed, k.v.norm());
    max_slack = std::max(max_slack, k.slack);
  }
  CHECK(max_speed <= prm.v_max + max_slack + 1e-9);
  CHECK((sol.knots.back().p - t.p_f).norm() <= prm.p_tol + 1e-9);
  CHECK((sol.knots.back().v - t.v_f).norm() <= prm.v_tol + 1e-9);
}

TEST_CASE("stationary request converges to a near-hover profile") {
  BoundaryState b;
  b.p0 = Vec3(5, 1, 1);
  b.t0 = Vec3(11.3796, 0, 0);
  GuidanceTarget t;
  t.p_f = b.p0;
  auto prm = default_params();
  // A generous arrival ball rewards ending in a gentle dive (fuel is linear
  // in thrust, so shedding the allowed terminal speed is free impulse);
  // shrinking the ball bounds that excursion without changing its nature.
  prm.v_tol = 0.01;

  GuidanceResult res = solve_guidance(b, t, prm);
  REQUIRE(res.converged);
  const double hover = prm.mass * kGravity;
  for (const auto& k : res.solution.knots) {
    CHECK((k.thrust - Vec3(hover, 0, 0)).norm() < 0.15);
    CHECK((k.p - b.p0).norm() < prm.p_tol + 1e-6);
    CHECK(k.v.norm() < 0.05);
    // The optimum sheds the terminal-ball speed through a slow ramp, so
    // rates stay far from the limit and free of oscillation.
    CHECK(k.thrust_rate.norm() < 2.0);
  }
  CHECK(audit(res.solution, prm).max_violation() < 1e-6);
}

TEST_CASE("descent outside the landing cone fails fast") {
  BoundaryState b;
  b.p0 = Vec3(0.5, 8, 0);  // far to the side, barely above the pad
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(0, 0, 0);
  auto prm = default_params();
  prm.phase = Phase::kDescent;

  GuidanceResult res = solve_guidance(b, t, prm);
  CHECK(!res.converged);
  CHECK(res.solution.report.status == nlp::SolveStatus::kInfeasibleQp);
  CHECK(res.solution.knots.empty());
}

TEST_CASE("descent from inside the cone lands within tolerance") {
  BoundaryState b;
  b.p0 = Vec3(10, 1, 0);
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(0, 0, 0);
  auto prm = default_params();
  prm.phase = Phase::kDescent;

  GuidanceResult res = solve_guidance(b, t, prm);
  REQUIRE(res.converged);
  CHECK(audit(res.solution, prm).max_violation() < 1e-6);
  // Every knot stays inside the cone anchored at the pad.
  const double tan_gs = std::tan(prm.glide_slope);
  for (const auto& k : res.solution.knots) {
    const Vec3 d = k.p - t.p_f;
    CHECK(d.x() >= tan_gs * std::hypot(d.y(), d.z()) - 1e-6);
  }
}

TEST_CASE("raising the slack weight never buys more slack") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lat(-4.0, 4.0);
  int solved_pairs = 0;
  for (int trial = 0; trial < 5; ++trial) {
    BoundaryState b;
    b.t0 = Vec3(11.38, 0, 0);
    GuidanceTarget t;
    t.p_f = Vec3(8, lat(rng), lat(rng));
    auto prm = default_params();
    prm.tf_max = 5.0;  // tight enough that the speed limit matters
    prm.lambda2 = 10.0;

    GuidanceResult low = solve_guidance(b, t, prm);
    prm.lambda2 = 300.0;
    GuidanceResult high = solve_guidance(b, t, prm);
    if (!low.converged || !high.converged) {
      continue;
    }
    ++solved_pairs;
    auto slack_energy = [](const GuidanceSolution& s) {
      double e = 0;
      for (const auto& k : s.knots) {
        e += k.slack * k.slack;
      }
      return e;
    };
    CHECK(slack_energy(high.solution) <= slack_energy(low.solution) + 1e-8);
  }
  CHECK(solved_pairs >= 4);
}

TEST_CASE("doubling the mission distances rescales the trajectory onto itself") {
  // Gravity pins the acceleration scale, so doubling every distance (target,
  // cone anchor, arrival ball) with the time window doubled stretches the
  // flight by sqrt(2): positions double, velocities grow by sqrt(2), and the
  // thrust profile is reused knot for knot. The velocity- and time-dimensioned
  // knobs (v_tol and the cost weights) ride along in the doubled units, and
  // the speed and rate limits stay slack on both sides, so the doubled v_max
  // never binds.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> side(-2.0, 2.0);
  const double ly = side(rng);
  const double lz = side(rng);
  auto make = [&](double s) {
    BoundaryState b;
    b.t0 = Vec3(11.3796, 0, 0);
    GuidanceTarget t;
    t.p_f = Vec3(8.0 * s, ly * s, lz * s);
    auto prm = default_params();
    prm.p_tol = 0.2 * s;
    prm.v_tol = 0.1 * std::sqrt(s);
    prm.v_max = 6.0 * s;
    prm.tf_min = 1.0 * s;
    prm.tf_max = 30.0 * s;
    prm.lambda1 *= s;
    prm.lambda2 /= s;
    GuidanceResult res = solve_guidance(b, t, prm);
    if (res.converged) {
      CHECK(audit(res.solution, prm).max_violation() < 1e-6);
    }
    return res;
  };

  GuidanceResult base = make(1.0);
  GuidanceResult twice = make(2.0);
  REQUIRE(base.converged);
  REQUIRE(twice.converged);
  CHECK(twice.solution.t_f / base.solution.t_f ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
  double p_err = 0;
  double v_err = 0;
  for (size_t k = 0; k < base.solution.knots.size(); ++k) {
    p_err = std::max(p_err, (twice.solution.knots[k].p / 2.0 -
                             base.solution.knots[k].p)
                                .norm());
    v_err = std::max(v_err, (twice.solution.knots[k].v / std::sqrt(2.0) -
                             base.solution.knots[k].v)
                                .norm());
  }
  CHECK(p_err < 1e-4);
  CHECK(v_err < 1e-4);
}

TEST_CASE("sampling interpolates knots and clamps the ends") {
  TranscriptionLayout L;
  L.num_nodes = 4;
  GuidanceSolution sol;
  sol.t_f = 3.0;
  sol.knots.resize(4);
  for (int k = 0; k < 4; ++k) {
    sol.knots[k].p = Vec3(k * k, -k, 1);
    sol.knots[k].v = Vec3(0, k, 2 * k);
  }
  auto [p0, v0] = sample(sol, 0.0);
  CHECK(p0 == sol.knots[0].p);
  CHECK(v0 == sol.knots[0].v);
  auto [pe, ve] = sample(sol, 99.0);
  CHECK(pe == sol.knots[3].p);
  CHECK(ve == sol.knots[3].v);
  auto [pn, vn] = sample(sol, -1.0);
  CHECK(pn == sol.knots[0].p);
  CHECK(vn == sol.knots[0].v);
  // Midpoint between knots 1 and 2 (knot spacing is 1 s here).
  auto [pm, vm] = sample(sol, 1.5);
  CHECK((pm - Vec3(2.5, -1.5, 1)).norm() < 1e-12);
  CHECK((vm - Vec3(0, 1.5, 3)).norm() < 1e-12);

  GuidanceSolution empty;
  CHECK_THROWS_AS(sample(empty, 0.0), std::invalid_argument);
}

TEST_CASE("replan triggers fire in priority order") {
  GuidanceSolution sol;
  sol.t_f = 10.0;
  sol.knots.resize(2);
  sol.knots[0].p = Vec3(0, 0, 0);
  sol.knots[1].p = Vec3(10, 0, 0);
  sol.target.p_f = Vec3(10, 0, 0);
  ReplanThresholds th;

  CHECK(replan_needed(nullptr, 0, Vec3::Zero(), sol.target, th) ==
        ReplanReason::kPreTakeoff);

  GuidanceTarget moved;
  moved.p_f = Vec3(10, 2, 0);
  CHECK(replan_needed(&sol, 5.0, Vec3(5, 0, 0), moved, th) ==
        ReplanReason::kTargetChanged);

  CHECK(replan_needed(&sol, 5.0, Vec3(5, 0.6, 0), sol.target, th) ==
        ReplanReason::kTrackingError);
  CHECK(replan_needed(&sol, 5.0, Vec3(5, 0.4, 0), sol.target, th) ==
        ReplanReason::kNone);

  CHECK(replan_needed(&sol, 9.5, Vec3(9.5, 0, 0), sol.target, th) ==
        ReplanReason::kNearEnd);
  CHECK(replan_needed(&sol, 8.5, Vec3(8.5, 0, 0), sol.target, th) ==
        ReplanReason::kNone);
}

TEST_CASE("guidance solves are deterministic") {
  BoundaryState b;
  b.t0 = Vec3(11.38, 0, 0);
  GuidanceTarget t;
  t.p_f = Vec3(7, 2, -1);
  auto prm = default_params();

  GuidanceResult a = solve_guidance(b, t, prm);
  GuidanceResult c = solve_guidance(b, t, prm);
  REQUIRE(a.converged);
  REQUIRE(c.converged);
  CHECK(a.solution.t_f == c.solution.t_f);
  for (size_t k = 0; k < a.solution.knots.size(); ++k) {
    CHECK(a.solution.knots[k].p == c.solution.knots[k].p);
    CHECK(a.solution.knots[k].thrust == c.solution.knots[k].thrust);
  }
}
