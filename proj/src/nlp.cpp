#include "rocket/nlp.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rocket::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BoundRows {
  std::vector<int> lb;  // variable indices with finite lower bounds
  std::vector<int> ub;
};

struct Evaluation {
  double f = 0;
  VecX grad;
  VecX c_eq;
  MatX j_eq;
  VecX c_in;
  MatX j_in;
};

void eval_full(const NlpProblem& p, const VecX& z, Evaluation& e) {
  e.grad.resize(p.num_vars);
  e.f = p.cost(z, &e.grad);
  if (p.num_eq > 0) {
    e.c_eq.resize(p.num_eq);
    e.j_eq.resize(p.num_eq, p.num_vars);
    p.equality(z, e.c_eq, &e.j_eq);
  } else {
    e.c_eq.resize(0);
    e.j_eq.resize(0, p.num_vars);
  }
  if (p.num_ineq > 0) {
    e.c_in.resize(p.num_ineq);
    e.j_in.resize(p.num_ineq, p.num_vars);
    p.inequality(z, e.c_in, &e.j_in);
  } else {
    e.c_in.resize(0);
    e.j_in.resize(0, p.num_vars);
  }
}

// l1 norm of all constraint violations (the merit's infeasibility measure).
double violation_l1(const NlpProblem& p, const BoundRows& br, const VecX& z,
                    const VecX& c_eq, const VecX& c_in) {
  double v = 0;
  for (int i = 0; i < c_eq.size(); ++i) {
    v += std::abs(c_eq(i));
  }
  for (int i = 0; i < c_in.size(); ++i) {
    v += std::max(0.0, -c_in(i));
  }
  for (int i : br.lb) {
    v += std::max(0.0, p.lower_bounds(i) - z(i));
  }
  for (int i : br.ub) {
    v += std::max(0.0, z(i) - p.upper_bounds(i));
  }
  return v;
}

double violation_inf(const NlpProblem& p, const BoundRows& br, const VecX& z,
                     const VecX& c_eq, const VecX& c_in) {
  double v = 0;
  if (c_eq.size() > 0) {
    v = c_eq.cwiseAbs().maxCoeff();
  }
  for (int i = 0; i < c_in.size(); ++i) {
    v = std::max(v, -c_in(i));
  }
  for (int i : br.lb) {
    v = std::max(v, p.lower_bounds(i) - z(i));
  }
  for (int i : br.ub) {
    v = std::max(v, z(i) - p.upper_bounds(i));
  }
  return v;
}

// Stationarity and complementarity of the Lagrangian with the stacked
// multiplier layout produced by solve_qp.
double kkt_residual(const NlpProblem& p, const BoundRows& br, const VecX& z,
                    const Evaluation& e, const VecX& lambda, const VecX& mu) {
  VecX stat = e.grad;
  if (p.num_eq > 0 && lambda.size() == p.num_eq) {
    stat.noalias() -= e.j_eq.transpose() * lambda;
  }
  double comp = 0;
  if (mu.size() ==
      p.num_ineq + static_cast<int>(br.lb.size() + br.ub.size())) {
    if (p.num_ineq > 0) {
      stat.noalias() -= e.j_in.transpose() * mu.head(p.num_ineq);
    }
    int row = p.num_ineq;
    for (int i : br.lb) {
      stat(i) -= mu(row);
      comp = std::max(comp, std::abs(mu(row) * (z(i) - p.lower_bounds(i))));
      ++row;
    }
    for (int i : br.ub) {
      stat(i) += mu(row);
      comp = std::max(comp, std::abs(mu(row) * (p.upper_bounds(i) - z(i))));
      ++row;
    }
    for (int i = 0; i < p.num_ineq; ++i) {
      comp = std::max(comp, std::abs(mu(i) * e.c_in(i)));
    }
  }
  return std::max(stat.cwiseAbs().maxCoeff(), comp);
}

void bfgs_update(MatX& b, const VecX& s, const VecX& y) {
  const double sbs = s.dot(b * s);
  const double sy = s.dot(y);
  if (sbs < 1e-16) {
    return;
  }
  VecX y_tilde = y;
  if (sy < 0.2 * sbs) {  // Powell damping keeps B positive definite
    const double theta = 0.8 * sbs / (sbs - sy);
    y_tilde = theta * y + (1.0 - theta) * (b * s);
  }
  const double sy_t = s.dot(y_tilde);
  if (sy_t < 1e-16) {
    return;
  }
  const VecX bs = b * s;
  b += (y_tilde * y_tilde.transpose()) / sy_t -
       (bs * bs.transpose()) / sbs;
}

}  // namespace

SolveResult solve_nlp(const NlpProblem& p, const SqpOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  if (p.num_vars <= 0 || !p.cost) {
    throw std::invalid_argument("solve_nlp: problem lacks variables or cost");
  }
  if ((p.num_eq > 0 && !p.equality) || (p.num_ineq > 0 && !p.inequality)) {
    throw std::invalid_argument("solve_nlp: missing constraint callback");
  }
  if (p.initial_guess.size() != p.num_vars) {
    throw std::invalid_argument("solve_nlp: initial guess size mismatch");
  }
  const bool has_lb = p.lower_bounds.size() == p.num_vars;
  const bool has_ub = p.upper_bounds.size() == p.num_vars;

  BoundRows br;
  if (has_lb) {
    for (int i = 0; i < p.num_vars; ++i) {
      if (p.lower_bounds(i) > -kInf) {
        br.lb.push_back(i);
      }
    }
  }
  if (has_ub) {
    for (int i = 0; i < p.num_vars; ++i) {
      if (p.upper_bounds(i) < kInf) {
        br.ub.push_back(i);
      }
    }
  }

  VecX z = p.initial_guess;
  for (int i : br.lb) {
    z(i) = std::max(z(i), p.lower_bounds(i));
  }
  for (int i : br.ub) {
    z(i) = std::min(z(i), p.upper_bounds(i));
  }

  SolveResult out;
  SolveReport& rep = out.report;

  Evaluation e;
  eval_full(p, z, e);

  MatX b_mat;
  const bool use_bfgs = !p.cost_hessian && !p.lagrangian_hessian;
  if (use_bfgs) {
    b_mat = MatX::Identity(p.num_vars, p.num_vars);
  } else {
    b_mat.resize(p.num_vars, p.num_vars);
  }

  VecX lambda = VecX::Zero(p.num_eq);
  VecX mu;  // stacked QP layout, empty until the first subproblem
  double rho = opt.initial_penalty;

  // Levenberg shift applied on top of a supplied (Gauss-Newton style) cost
  // Hessian. Such Hessians are often singular along directions where the
  // cost is locally linear; the shift bounds the subproblem steps and is
  // adapted from line-search behaviour, vanishing near a solution.
  double sigma = 0.0;
  double h_scale = 1.0;
  bool sigma_init = false;

  auto finish = [&](SolveStatus st) {
    rep.status = st;
    rep.kkt_residual = kkt_residual(p, br, z, e, lambda, mu);
    rep.constraint_violation = violation_inf(p, br, z, e.c_eq, e.c_in);
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    out.z = z;
    out.lambda_eq = lambda;
    out.mu_ineq = mu;
    return out;
  };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    rep.iterations = iter;
    const double viol0 = violation_inf(p, br, z, e.c_eq, e.c_in);
    const double kkt = kkt_residual(p, br, z, e, lambda, mu);
    if (kkt <= opt.tol_kkt && viol0 <= opt.tol_feas) {
      return finish(SolveStatus::kConverged);
    }

    if (!use_bfgs) {
      if (p.lagrangian_hessian) {
        VecX mu_gen = VecX::Zero(p.num_ineq);
        if (p.num_ineq > 0 && mu.size() >= p.num_ineq) {
          mu_gen = mu.head(p.num_ineq);
        }
        p.lagrangian_hessian(z, lambda, mu_gen, b_mat);
      } else {
        p.cost_hessian(z, b_mat);
      }
      h_scale = 1.0 + b_mat.cwiseAbs().maxCoeff();
      if (!sigma_init) {
        sigma = 1e-2 * h_scale;
        sigma_init = true;
      }
      b_mat.diagonal().array() += sigma;
    }

    VecX lb_step, ub_step;
    if (!br.lb.empty() || !br.ub.empty()) {
      lb_step = VecX::Constant(p.num_vars, -kInf);
      ub_step = VecX::Constant(p.num_vars, kInf);
      for (int i : br.lb) {
        lb_step(i) = p.lower_bounds(i) - z(i);
      }
      for (int i : br.ub) {
        ub_step(i) = p.upper_bounds(i) - z(i);
      }
    }

    QpResult qp = solve_qp(b_mat, e.grad, e.j_eq, -e.c_eq, e.j_in, -e.c_in,
                           lb_step, ub_step);
    if (qp.status == QpStatus::kNumericalFailure) {
      return finish(SolveStatus::kNumericalFailure);
    }
    const bool restoration = qp.status == QpStatus::kInfeasible;

    const VecX step = qp.z;
    const double step_norm = step.cwiseAbs().maxCoeff();

    // Infeasibility the linearized model leaves behind after the step. Zero
    // for a feasible subproblem; positive for a relaxed (restoration) one.
    VecX lin_eq = e.c_eq;
    VecX lin_in = e.c_in;
    if (p.num_eq > 0) {
      lin_eq.noalias() += e.j_eq * step;
    }
    if (p.num_ineq > 0) {
      lin_in.noalias() += e.j_in * step;
    }
    const double viol1 = violation_l1(p, br, z, e.c_eq, e.c_in);
    const double viol1_left = violation_l1(p, br, z + step, lin_eq, lin_in);
    const double viol_drop = viol1 - viol1_left;

    if (restoration && viol_drop <= 1e-14 && viol0 > opt.tol_feas) {
      // Even the slack-relaxed subproblem cannot reduce the linearized
      // infeasibility: locally there is nothing better.
      return finish(SolveStatus::kInfeasibleQp);
    }

    // Penalty update: large enough for the subproblem multipliers and for
    // the model-decrease bound. Multipliers of a relaxed subproblem carry
    // the relaxation's penalty scale and are ignored. A weight far above
    // what the current iteration requires is allowed to decay so that one
    // early spike does not smother the line search for the rest of the run.
    double required = 0.1;
    if (!restoration) {
      if (qp.lambda_eq.size() > 0) {
        required = std::max(required, qp.lambda_eq.cwiseAbs().maxCoeff() + 0.1);
      }
      if (qp.mu_ineq.size() > 0) {
        required = std::max(required, qp.mu_ineq.maxCoeff() + 0.1);
      }
    }
    if (viol_drop > 1e-14) {
      const double model = e.grad.dot(step) + 0.5 * step.dot(b_mat * step);
      required = std::max(required, model / (0.9 * viol_drop));
    }
    const double rho_floor = std::max(required, opt.initial_penalty);
    if (rho < required) {
      rho = required;
    } else if (!restoration && rho > 100.0 * rho_floor) {
      rho = 10.0 * rho_floor;
    }

    const double phi0 = e.f + rho * viol1;
    double d_dir = e.grad.dot(step) - rho * viol_drop;
    if (d_dir > -1e-16) {
      if (step_norm <= 1e-12 * (1.0 + z.cwiseAbs().maxCoeff()) &&
          viol0 <= opt.tol_feas) {
        // Degenerate tiny step at a feasible point: accept the subproblem
        // multipliers and re-test optimality.
        lambda = qp.lambda_eq;
        mu = qp.mu_ineq;
        const double kkt_new = kkt_residual(p, br, z, e, lambda, mu);
        if (kkt_new <= opt.tol_kkt) {
          return finish(SolveStatus::kConverged);
        }
        return finish(restoration ? SolveStatus::kInfeasibleQp
                                  : SolveStatus::kNumericalFailure);
      }
      d_dir = -1e-16;
    }

    double alpha = 1.0;
    bool accepted = false;
    VecX z_try, c_eq_try(p.num_eq), c_in_try(p.num_ineq);
    double f_try = 0, phi_try = 0;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
      z_try = z + alpha * step;
      f_try = p.cost(z_try, nullptr);
      if (p.num_eq > 0) {
        p.equality(z_try, c_eq_try, nullptr);
      }
      if (p.num_ineq > 0) {
        p.inequality(z_try, c_in_try, nullptr);
      }
      phi_try = f_try + rho * violation_l1(p, br, z_try, c_eq_try, c_in_try);
      if (std::isfinite(phi_try) &&
          phi_try <= phi0 + opt.armijo_c * alpha * d_dir) {
        accepted = true;
        break;
      }
      alpha *= opt.backtrack_factor;
    }
    if (!accepted) {
      if (restoration) {
        return finish(SolveStatus::kInfeasibleQp);
      }
      if (!use_bfgs && sigma < 1e8 * h_scale) {
        // Retry from the same point with a much heavier shift; as the shift
        // grows the step bends toward a short steepest-descent step, which
        // must eventually pass the Armijo test.
        sigma *= 100.0;
        continue;
      }
      return finish(SolveStatus::kNumericalFailure);
    }

    rep.history.push_back({phi0, phi_try, alpha * step_norm, rho, alpha, kkt,
                           viol0, sigma, restoration});

    if (!use_bfgs) {
      if (alpha == 1.0) {
        sigma = std::max(1e-10, sigma / 3.0);
      } else if (alpha < 0.2) {
        sigma = std::min(sigma * 10.0, 1e8 * h_scale);
      }
    }

    const VecX grad_old = e.grad;
    const MatX j_eq_old = e.j_eq;
    const MatX j_in_old = e.j_in;
    const VecX z_old = z;

    z = z_try;
    if (!restoration) {
      lambda = qp.lambda_eq;
      mu = qp.mu_ineq;
    }
    eval_full(p, z, e);

    if (use_bfgs && !restoration) {
      // Damped BFGS on the Lagrangian gradient difference.
      VecX gl_new = e.grad;
      VecX gl_old = grad_old;
      if (p.num_eq > 0) {
        gl_new.noalias() -= e.j_eq.transpose() * lambda;
        gl_old.noalias() -= j_eq_old.transpose() * lambda;
      }
      if (p.num_ineq > 0 && mu.size() >= p.num_ineq) {
        gl_new.noalias() -= e.j_in.transpose() * mu.head(p.num_ineq);
        gl_old.noalias() -= j_in_old.transpose() * mu.head(p.num_ineq);
      }
      bfgs_update(b_mat, z - z_old, gl_new - gl_old);
    }
  }

  rep.iterations = opt.max_iterations;
  return finish(SolveStatus::kMaxIterations);
}

}  // namespace rocket::nlp
