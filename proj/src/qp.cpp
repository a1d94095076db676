#include "rocket/qp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rocket::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

enum class GiStatus { kOptimal, kInfeasible, kIterLimit };

struct GiOutcome {
  GiStatus status = GiStatus::kIterLimit;
  VecX y;
  VecX mu;
  int iterations = 0;
};

// Givens update appending the constraint whose projected normal is d to the
// working-set factorization. Returns false when d is linearly dependent on
// the current working set.
bool gi_add_constraint(MatX& r_mat, MatX& j_mat, VecX& d, int& iq,
                       double& r_norm) {
  const int n = static_cast<int>(d.size());
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h < kEps) {
      continue;
    }
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = j_mat(k, j - 1);
      const double t2 = j_mat(k, j);
      j_mat(k, j - 1) = t1 * cc + t2 * ss;
      j_mat(k, j) = xny * (t1 + j_mat(k, j - 1)) - t2;
    }
  }
  ++iq;
  r_mat.col(iq - 1).head(iq) = d.head(iq);
  if (std::abs(d(iq - 1)) <= kEps * r_norm) {
    return false;
  }
  r_norm = std::max(r_norm, std::abs(d(iq - 1)));
  return true;
}

void gi_delete_constraint(MatX& r_mat, MatX& j_mat, std::vector<int>& act,
                          VecX& u, int n, int& iq, int l) {
  int qq = -1;
  for (int i = 0; i < iq; ++i) {
    if (act[i] == l) {
      qq = i;
      break;
    }
  }
  if (qq < 0) {
    return;
  }
  for (int i = qq; i < iq - 1; ++i) {
    act[i] = act[i + 1];
    u(i) = u(i + 1);
    r_mat.col(i) = r_mat.col(i + 1);
  }
  act[iq - 1] = act[iq];
  u(iq - 1) = u(iq);
  act[iq] = 0;
  u(iq) = 0.0;
  r_mat.col(iq - 1).head(iq).setZero();
  --iq;
  if (iq == 0) {
    return;
  }
  // Re-triangularize the working-set factor after the column shift.
  for (int j = qq; j < iq; ++j) {
    double cc = r_mat(j, j);
    double ss = r_mat(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h < kEps) {
      continue;
    }
    cc /= h;
    ss /= h;
    r_mat(j + 1, j) = 0.0;
    if (cc < 0) {
      r_mat(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      r_mat(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = r_mat(j, k);
      const double t2 = r_mat(j + 1, k);
      r_mat(j, k) = t1 * cc + t2 * ss;
      r_mat(j + 1, k) = xny * (t1 + r_mat(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = j_mat(k, j);
      const double t2 = j_mat(k, j + 1);
      j_mat(k, j) = t1 * cc + t2 * ss;
      j_mat(k, j + 1) = xny * (j_mat(k, j) + t1) - t2;
    }
  }
}

// Goldfarb-Idnani dual active set method for
//   min 0.5 y'Hy + g'y  s.t.  A y >= b
// with H strictly convex (llt holds its Cholesky factor). Starts from the
// unconstrained minimizer, which is dual feasible, and adds the most violated
// primal constraint each outer iteration. Tie-breaking is by lowest row
// index throughout, so the solve is deterministic.
GiOutcome gi_solve(const Eigen::LLT<MatX>& llt, double trace_h, const VecX& g,
                   const MatX& ai, const VecX& bi) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(ai.rows());

  GiOutcome out;
  MatX j_mat = MatX::Identity(n, n);
  llt.matrixU().template solveInPlace(j_mat);  // J = L^-T
  const double c1 = trace_h;
  const double c2 = j_mat.trace();

  VecX x = -llt.solve(g);
  out.mu = VecX::Zero(m);
  if (m == 0) {
    out.status = GiStatus::kOptimal;
    out.y = x;
    return out;
  }

  MatX r_mat = MatX::Zero(n, n);
  double r_norm = 1.0;
  int iq = 0;
  std::vector<int> act(m + 1, 0);
  std::vector<int> act_old(m + 1, 0);
  std::vector<char> is_active(m, 0);
  std::vector<char> excluded(m, 0);
  VecX u = VecX::Zero(m + 1);
  VecX u_old = VecX::Zero(m + 1);
  VecX s(m), d(n), zstep(n), r(m + 1), np(n), x_old(n);

  const int max_iter = 10 * (n + m) + 100;
  const double psi_tol = 100.0 * m * kEps * std::abs(c1 * c2);

  auto finalize = [&](GiStatus st) {
    out.status = st;
    out.y = x;
    out.mu.setZero();
    for (int k = 0; k < iq; ++k) {
      out.mu(act[k]) = u(k);
    }
  };

  int ip = -1;
  double ss_min = 0.0;

l1:
  ++out.iterations;
  if (out.iterations > max_iter) {
    finalize(GiStatus::kIterLimit);
    return out;
  }
  {
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      excluded[i] = 0;
      s(i) = ai.row(i).dot(x) - bi(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= psi_tol) {
      finalize(GiStatus::kOptimal);
      return out;
    }
  }
  for (int i = 0; i < iq; ++i) {
    u_old(i) = u(i);
    act_old[i] = act[i];
  }
  x_old = x;

l2:
  ss_min = 0.0;
  ip = -1;
  for (int i = 0; i < m; ++i) {
    if (s(i) < ss_min && !is_active[i] && !excluded[i]) {
      ss_min = s(i);
      ip = i;
    }
  }
  if (ip < 0) {
    finalize(GiStatus::kOptimal);
    return out;
  }
  u(iq) = 0.0;
  act[iq] = ip;
  np = ai.row(ip).transpose();

l2a:
  d.noalias() = j_mat.transpose() * np;
  zstep.setZero();
  if (iq < n) {
    zstep.noalias() = j_mat.rightCols(n - iq) * d.tail(n - iq);
  }
  for (int i = iq - 1; i >= 0; --i) {
    double sum = 0.0;
    for (int k = i + 1; k < iq; ++k) {
      sum += r_mat(i, k) * r(k);
    }
    r(i) = (d(i) - sum) / r_mat(i, i);
  }

  double t1 = kInf;
  int l = -1;
  for (int k = 0; k < iq; ++k) {
    if (r(k) > 0 && u(k) / r(k) < t1) {
      t1 = u(k) / r(k);
      l = act[k];
    }
  }
  double t2 = kInf;
  const double znp = zstep.dot(np);
  if (zstep.squaredNorm() > kEps) {
    t2 = -s(ip) / znp;
  }
  const double t = std::min(t1, t2);

  if (t >= kInf) {
    finalize(GiStatus::kInfeasible);
    return out;
  }
  if (t2 >= kInf) {
    // Dual-only step: drop the blocking constraint and retry.
    u.head(iq) -= t * r.head(iq);
    u(iq) += t;
    is_active[l] = 0;
    gi_delete_constraint(r_mat, j_mat, act, u, n, iq, l);
    goto l2a;
  }

  x += t * zstep;
  u.head(iq) -= t * r.head(iq);
  u(iq) += t;

  if (std::abs(t - t2) < kEps) {
    if (!gi_add_constraint(r_mat, j_mat, d, iq, r_norm)) {
      // Degenerate normal: exclude it for this pass and restore the
      // pre-step iterate.
      excluded[ip] = 1;
      gi_delete_constraint(r_mat, j_mat, act, u, n, iq, ip);
      std::fill(is_active.begin(), is_active.end(), 0);
      for (int i = 0; i < iq; ++i) {
        act[i] = act_old[i];
        u(i) = u_old(i);
        is_active[act[i]] = 1;
      }
      x = x_old;
      goto l2;
    }
    is_active[ip] = 1;
    goto l1;
  }

  // Partial step: drop the blocking constraint, keep working on ip.
  is_active[l] = 0;
  gi_delete_constraint(r_mat, j_mat, act, u, n, iq, l);
  s(ip) = ai.row(ip).dot(x) - bi(ip);
  goto l2a;
}

// Stack general rows and finite bounds into one A y >= b system.
void stack_inequalities(const MatX& a_ineq, const VecX& b_ineq, const VecX& lb,
                        const VecX& ub, int n, MatX& ai, VecX& bi) {
  std::vector<int> lb_rows, ub_rows;
  for (int i = 0; i < lb.size(); ++i) {
    if (lb(i) > -kInf) {
      lb_rows.push_back(i);
    }
  }
  for (int i = 0; i < ub.size(); ++i) {
    if (ub(i) < kInf) {
      ub_rows.push_back(i);
    }
  }
  const int m = static_cast<int>(a_ineq.rows());
  const int total = m + static_cast<int>(lb_rows.size() + ub_rows.size());
  ai = MatX::Zero(total, n);
  bi = VecX::Zero(total);
  if (m > 0) {
    ai.topRows(m) = a_ineq;
    bi.head(m) = b_ineq;
  }
  int row = m;
  for (int i : lb_rows) {
    ai(row, i) = 1.0;
    bi(row) = lb(i);
    ++row;
  }
  for (int i : ub_rows) {
    ai(row, i) = -1.0;
    bi(row) = -ub(i);
    ++row;
  }
}

// Factor the reduced Hessian, restoring positive definiteness if needed by
// reflecting nonpositive eigenvalues onto a small floor. Unlike a uniform
// diagonal shift, the reflection leaves well-conditioned directions at their
// true curvature, so Newton steps keep their scale when a pinned direction
// carries negative curvature.
bool robust_llt(MatX& h, Eigen::LLT<MatX>& llt) {
  const int n = static_cast<int>(h.rows());
  const double scale = std::max(1.0, h.trace() / std::max(1, n));
  const auto factored = [&]() {
    if (llt.info() != Eigen::Success) {
      return false;
    }
    for (int i = 0; i < n; ++i) {
      if (!(llt.matrixLLT()(i, i) > 1e-14 * scale)) {
        return false;
      }
    }
    return true;
  };
  llt.compute(h);
  if (factored()) {
    return true;
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(h);
  if (es.info() != Eigen::Success) {
    return false;
  }
  VecX lam = es.eigenvalues();
  // The floor keeps steps bounded along directions whose true curvature is
  // near zero; reflected directions keep their magnitude.
  const double floor = 1e-3 * scale;
  for (int i = 0; i < n; ++i) {
    lam(i) = std::max(std::abs(lam(i)), floor);
  }
  h = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  llt.compute(h);
  return factored();
}

struct Metrics {
  double kkt = kInf;
  double viol = 0.0;
};

Metrics kkt_metrics(const MatX& h, const VecX& g, const MatX& a_eq,
                    const VecX& b_eq, const MatX& ai, const VecX& bi,
                    const VecX& z, const VecX& lambda, const VecX& mu) {
  Metrics m;
  VecX stat = h * z + g;
  if (a_eq.rows() > 0) {
    stat.noalias() -= a_eq.transpose() * lambda;
  }
  if (ai.rows() > 0) {
    stat.noalias() -= ai.transpose() * mu;
  }
  m.kkt = stat.size() > 0 ? stat.cwiseAbs().maxCoeff() : 0.0;
  m.viol = 0.0;
  if (a_eq.rows() > 0) {
    m.viol = (a_eq * z - b_eq).cwiseAbs().maxCoeff();
  }
  if (ai.rows() > 0) {
    m.viol = std::max(m.viol, (bi - ai * z).maxCoeff());
  }
  m.viol = std::max(m.viol, 0.0);
  return m;
}

}  // namespace

QpResult solve_qp(const MatX& h, const VecX& g, const MatX& a_eq,
                  const VecX& b_eq, const MatX& a_ineq, const VecX& b_ineq,
                  const VecX& lb, const VecX& ub) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n || g.size() != n) {
    throw std::invalid_argument("solve_qp: H/g dimensions disagree");
  }
  if (a_eq.rows() != b_eq.size() || (a_eq.rows() > 0 && a_eq.cols() != n)) {
    throw std::invalid_argument("solve_qp: equality dimensions disagree");
  }
  if (a_ineq.rows() != b_ineq.size() ||
      (a_ineq.rows() > 0 && a_ineq.cols() != n)) {
    throw std::invalid_argument("solve_qp: inequality dimensions disagree");
  }
  if ((lb.size() != 0 && lb.size() != n) || (ub.size() != 0 && ub.size() != n)) {
    throw std::invalid_argument("solve_qp: bound dimensions disagree");
  }
  const int m_eq = static_cast<int>(a_eq.rows());

  const MatX h_sym = 0.5 * (h + h.transpose());
  MatX ai;
  VecX bi;
  stack_inequalities(a_ineq, b_ineq, lb, ub, n, ai, bi);
  const int m_in = static_cast<int>(ai.rows());

  QpResult res;
  res.lambda_eq = VecX::Zero(m_eq);
  res.mu_ineq = VecX::Zero(m_in);

  // Null-space reduction of the equalities: z = z_p + Z y with A_eq Z = 0.
  VecX z_p = VecX::Zero(n);
  MatX z_basis;
  int n_red = n;
  Eigen::HouseholderQR<MatX> qr;
  bool have_qr = false;
  if (m_eq > 0) {
    double diag_max = 0.0, diag_min = kInf;
    if (m_eq <= n) {
      qr.compute(a_eq.transpose());
      have_qr = true;
      const auto& qr_mat = qr.matrixQR();
      for (int i = 0; i < m_eq; ++i) {
        const double v = std::abs(qr_mat(i, i));
        diag_max = std::max(diag_max, v);
        diag_min = std::min(diag_min, v);
      }
    }
    if (m_eq > n || !(diag_min > 1e-12 * std::max(diag_max, 1.0))) {
      // Rank-deficient equalities: consistent systems are reduced through a
      // pivoted factorization instead.
      Eigen::ColPivHouseholderQR<MatX> cqr(a_eq.transpose());
      cqr.setThreshold(1e-12);
      const int rank = static_cast<int>(cqr.rank());
      MatX q_full = cqr.householderQ() * MatX::Identity(n, n);
      MatX q1 = q_full.leftCols(rank);
      MatX r11 = cqr.matrixR().topLeftCorner(rank, rank);
      VecX b_perm = cqr.colsPermutation().transpose() * b_eq;
      VecX y1 =
          r11.transpose().triangularView<Eigen::Lower>().solve(b_perm.head(rank));
      z_p = q1 * y1;
      if ((a_eq * z_p - b_eq).cwiseAbs().maxCoeff() >
          1e-8 * (1.0 + b_eq.cwiseAbs().maxCoeff())) {
        res.status = QpStatus::kInfeasible;
        res.z = z_p;
        const Metrics m =
            kkt_metrics(h_sym, g, a_eq, b_eq, ai, bi, z_p, res.lambda_eq,
                        res.mu_ineq);
        res.max_violation = m.viol;
        return res;
      }
      n_red = n - rank;
      z_basis = q_full.rightCols(n_red);
      have_qr = false;  // dual recovery falls back to least squares below
    } else {
      VecX y1 = qr.matrixQR()
                    .topRows(m_eq)
                    .triangularView<Eigen::Upper>()
                    .transpose()
                    .solve(b_eq);
      VecX padded = VecX::Zero(n);
      padded.head(m_eq) = y1;
      z_p = qr.householderQ() * padded;
      MatX tail = MatX::Zero(n, n - m_eq);
      tail.bottomRows(n - m_eq).setIdentity();
      z_basis = qr.householderQ() * tail;
      n_red = n - m_eq;
    }
  } else {
    z_basis = MatX::Identity(n, n);
  }

  // Reduced problem data.
  MatX h_red;
  VecX g_red;
  MatX ai_red;
  VecX bi_red;
  if (m_eq > 0) {
    h_red = z_basis.transpose() * h_sym * z_basis;
    g_red = z_basis.transpose() * (g + h_sym * z_p);
    ai_red = ai * z_basis;
    bi_red = bi - ai * z_p;
  } else {
    h_red = h_sym;
    g_red = g;
    ai_red = ai;
    bi_red = bi;
  }

  auto recover_lambda = [&](const VecX& z, const VecX& mu) -> VecX {
    if (m_eq == 0) {
      return VecX();
    }
    VecX rhs = h_sym * z + g;
    if (m_in > 0) {
      rhs.noalias() -= ai.transpose() * mu;
    }
    if (have_qr) {
      return qr.solve(rhs);
    }
    return a_eq.transpose()
        .colPivHouseholderQr()
        .solve(rhs);
  };

  if (n_red == 0) {
    res.z = z_p;
    res.lambda_eq = recover_lambda(z_p, res.mu_ineq);
    const Metrics m = kkt_metrics(h_sym, g, a_eq, b_eq, ai, bi, res.z,
                                  res.lambda_eq, res.mu_ineq);
    res.kkt_residual = m.kkt;
    res.max_violation = m.viol;
    const double feas_tol = 1e-8 * (1.0 + bi.size() +
                                    (bi.size() ? bi.cwiseAbs().maxCoeff() : 0.0));
    res.status =
        m.viol <= feas_tol ? QpStatus::kOptimal : QpStatus::kInfeasible;
    return res;
  }

  Eigen::LLT<MatX> llt;
  if (!robust_llt(h_red, llt)) {
    res.status = QpStatus::kNumericalFailure;
    res.z = z_p;
    return res;
  }

  GiOutcome gi = gi_solve(llt, h_red.trace(), g_red, ai_red, bi_red);
  res.active_set_iterations = gi.iterations;

  if (gi.status == GiStatus::kOptimal) {
    res.z = z_p + z_basis * gi.y;
    res.mu_ineq = gi.mu;
    res.lambda_eq = recover_lambda(res.z, res.mu_ineq);
    const Metrics m = kkt_metrics(h_sym, g, a_eq, b_eq, ai, bi, res.z,
                                  res.lambda_eq, res.mu_ineq);
    res.kkt_residual = m.kkt;
    res.max_violation = m.viol;
    res.status = QpStatus::kOptimal;
    return res;
  }

  if (gi.status == GiStatus::kIterLimit) {
    res.status = QpStatus::kNumericalFailure;
    res.z = z_p + z_basis * gi.y;
    res.mu_ineq = gi.mu;
    const Metrics m = kkt_metrics(h_sym, g, a_eq, b_eq, ai, bi, res.z,
                                  res.lambda_eq, res.mu_ineq);
    res.kkt_residual = m.kkt;
    res.max_violation = m.viol;
    return res;
  }

  // Dual blow-up: confirm infeasibility with a slack-relaxed problem and
  // return its minimizer as the least-violating point.
  {
    if (m_in == 0) {
      res.status = QpStatus::kNumericalFailure;
      res.z = z_p + z_basis * gi.y;
      return res;
    }
    const double h_scale = std::max(1.0, h_red.trace() / n_red);
    const double g_scale = 1.0 + g_red.cwiseAbs().maxCoeff();
    const double kappa = 1e-4 * h_scale;
    const double big_m = 1e4 * g_scale;
    const int n_rel = n_red + m_in;
    MatX h_rel = MatX::Zero(n_rel, n_rel);
    h_rel.topLeftCorner(n_red, n_red) = h_red;
    h_rel.bottomRightCorner(m_in, m_in) =
        kappa * MatX::Identity(m_in, m_in);
    VecX g_rel(n_rel);
    g_rel.head(n_red) = g_red;
    g_rel.tail(m_in).setConstant(big_m);
    MatX ai_rel = MatX::Zero(2 * m_in, n_rel);
    VecX bi_rel = VecX::Zero(2 * m_in);
    ai_rel.topLeftCorner(m_in, n_red) = ai_red;
    ai_rel.topRightCorner(m_in, m_in).setIdentity();
    bi_rel.head(m_in) = bi_red;
    ai_rel.bottomRightCorner(m_in, m_in).setIdentity();

    Eigen::LLT<MatX> llt_rel;
    if (!robust_llt(h_rel, llt_rel)) {
      res.status = QpStatus::kNumericalFailure;
      res.z = z_p;
      return res;
    }
    GiOutcome rel = gi_solve(llt_rel, h_rel.trace(), g_rel, ai_rel, bi_rel);
    res.active_set_iterations += rel.iterations;
    if (rel.status != GiStatus::kOptimal) {
      res.status = QpStatus::kNumericalFailure;
      res.z = z_p;
      return res;
    }
    const VecX y = rel.y.head(n_red);
    const VecX slack = rel.y.tail(m_in);
    res.z = z_p + z_basis * y;
    res.mu_ineq = rel.mu.head(m_in);
    res.lambda_eq = recover_lambda(res.z, res.mu_ineq);
    const Metrics m = kkt_metrics(h_sym, g, a_eq, b_eq, ai, bi, res.z,
                                  res.lambda_eq, res.mu_ineq);
    res.kkt_residual = m.kkt;
    res.max_violation = m.viol;
    const double slack_tol = 1e-7 * (1.0 + bi.cwiseAbs().maxCoeff());
    res.status = slack.maxCoeff() > slack_tol ? QpStatus::kInfeasible
                                              : QpStatus::kOptimal;
    return res;
  }
}

}  // namespace rocket::nlp
