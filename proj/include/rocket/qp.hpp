#pragma once

#include <limits>

#include "rocket/types.hpp"

namespace rocket::nlp {

enum class QpStatus { kOptimal, kInfeasible, kNumericalFailure };

struct QpResult {
  QpStatus status = QpStatus::kNumericalFailure;
  VecX z;
  /// Multipliers with the convention  H z + g = A_eq' lambda + A_ineq' mu.
  VecX lambda_eq;
  /// Stacked as [general inequality rows, finite lower bounds, finite upper
  /// bounds]; nonnegative at an optimum.
  VecX mu_ineq;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double max_violation = std::numeric_limits<double>::infinity();
  int active_set_iterations = 0;
};

/// Solve  min 0.5 z'Hz + g'z  s.t.  A_eq z = b_eq,  A_ineq z >= b_ineq,
/// lb <= z <= ub.  H must be symmetric positive semidefinite; a diagonal
/// shift is applied internally when the reduced Hessian is not positive
/// definite. lb/ub may be empty, and may contain +-infinity entries.
///
/// Equalities are eliminated through a QR factorization of A_eq' and the
/// reduced strictly convex problem is solved with the Goldfarb-Idnani dual
/// active set method, so no feasible starting point is needed. On an
/// infeasible problem the returned z minimizes a slack-penalized relaxation
/// and max_violation reports how far it remains from feasibility.
QpResult solve_qp(const MatX& h, const VecX& g, const MatX& a_eq,
                  const VecX& b_eq, const MatX& a_ineq, const VecX& b_ineq,
                  const VecX& lb = VecX(), const VecX& ub = VecX());

}  // namespace rocket::nlp
