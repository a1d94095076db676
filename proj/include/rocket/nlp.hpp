#pragma once

#include <functional>
#include <vector>

#include "rocket/qp.hpp"
#include "rocket/types.hpp"

namespace rocket::nlp {

/// Smooth NLP in the form
///   min f(z)  s.t.  c_eq(z) = 0,  c_ineq(z) >= 0,  lb <= z <= ub.
/// Callbacks fill the Jacobian only when the pointer is non-null, so cheap
/// residual-only evaluations are possible during line search.
struct NlpProblem {
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;

  /// Returns f(z); writes the gradient into *grad when non-null.
  std::function<double(const VecX& z, VecX* grad)> cost;
  /// Writes c_eq(z) into r (size num_eq) and its Jacobian into *jac.
  std::function<void(const VecX& z, VecX& r, MatX* jac)> equality;
  /// Writes c_ineq(z) into r (size num_ineq) and its Jacobian into *jac.
  std::function<void(const VecX& z, VecX& r, MatX* jac)> inequality;
  /// Optional positive semidefinite cost Hessian (Gauss-Newton style).
  /// When absent a damped BFGS approximation is maintained instead.
  std::function<void(const VecX& z, MatX& h)> cost_hessian;
  /// Optional curvature model of the Lagrangian
  ///   L = f(z) - lambda' c_eq(z) - mu' c_ineq(z)
  /// evaluated with the solver's current multiplier estimates (mu covers the
  /// general inequality rows only; bounds are affine). Supplying the exact
  /// Hessian gives Newton steps; callers may also drop concave constraint
  /// terms to keep the subproblems well conditioned. Residual indefiniteness
  /// is absorbed by a diagonal shift. Takes precedence over cost_hessian.
  std::function<void(const VecX& z, const VecX& lambda, const VecX& mu,
                     MatX& h)>
      lagrangian_hessian;

  VecX lower_bounds;  // empty or size num_vars, -inf where unbounded
  VecX upper_bounds;  // empty or size num_vars, +inf where unbounded
  VecX initial_guess;
};

enum class SolveStatus {
  kConverged,
  kMaxIterations,
  kInfeasibleQp,
  kNumericalFailure,
};

struct IterRecord {
  double merit_before = 0;
  double merit_after = 0;
  double step_norm = 0;
  double penalty = 0;
  double step_scale = 0;      // accepted line-search fraction
  double kkt_before = 0;      // KKT residual entering the iteration
  double viol_before = 0;     // max constraint violation entering
  double hessian_shift = 0;   // diagonal damping applied this iteration
  bool relaxed_step = false;  // step came from a slack-relaxed subproblem
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double constraint_violation = std::numeric_limits<double>::infinity();
  double wall_time_s = 0;
  std::vector<IterRecord> history;
};

struct SqpOptions {
  double tol_kkt = 1e-6;
  double tol_feas = 1e-6;
  int max_iterations = 100;
  int max_backtracks = 30;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double initial_penalty = 1.0;
};

struct SolveResult {
  VecX z;
  /// Final multiplier estimates; mu follows the stacked QP layout
  /// [general rows, finite lower bounds, finite upper bounds].
  VecX lambda_eq;
  VecX mu_ineq;
  SolveReport report;
};

/// Line-search SQP with an l1 exact-penalty merit function. Subproblems are
/// strictly convex QPs; the penalty weight only grows, following the usual
/// lower bound from the subproblem multipliers and model decrease. A solve
/// reports kConverged only when the KKT residual and constraint violation
/// are within their tolerances at the returned point.
SolveResult solve_nlp(const NlpProblem& problem, const SqpOptions& options = {});

}  // namespace rocket::nlp
