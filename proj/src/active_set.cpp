#include "lmpf/active_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmpf/errors.hpp"

namespace lmpf::qp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rows as seen by the iteration: equality rows are always in the working
// set and shadow rows (second half of an equality pair) are never looked at.
struct Rows {
  const MatrixXd& A;
  const VectorXd& r;
  std::vector<char> is_eq;
  std::vector<char> skip;
};

struct Phase {
  const Rows& rows;
  const MatrixXd* H;  // nullptr for LP
  const VectorXd& q;
  double feas_tol;
  double opt_tol;
  int max_iterations;
};

bool independent_of(const MatrixXd& basis_rows, const Eigen::RowVectorXd& row, double tol) {
  if (basis_rows.rows() == 0) return row.norm() > tol;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(basis_rows.transpose());
  VectorXd coeffs = qr.solve(row.transpose());
  VectorXd resid = row.transpose() - basis_rows.transpose() * coeffs;
  return resid.norm() > tol * std::max(1.0, row.norm());
}

MatrixXd gather(const MatrixXd& A, const std::vector<int>& idx) {
  MatrixXd out(idx.size(), A.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(k) = A.row(idx[k]);
  return out;
}

struct PhaseOutcome {
  VectorXd y;  // multipliers aligned with the working set
  int iterations = 0;
};

// Runs the primal active-set iteration from a feasible x.
PhaseOutcome run_phase(const Phase& ph, VectorXd& x, std::vector<int>& work) {
  const MatrixXd& A = ph.rows.A;
  const VectorXd& r = ph.rows.r;
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  PhaseOutcome out;

  for (int it = 0; it < ph.max_iterations; ++it) {
    out.iterations = it + 1;
    VectorXd g = ph.q;
    if (ph.H) g.noalias() += (*ph.H) * x;

    const int k = static_cast<int>(work.size());
    MatrixXd aw = gather(A, work);
    MatrixXd q_full = MatrixXd::Identity(n, n);
    MatrixXd r_thin;
    if (k > 0) {
      Eigen::HouseholderQR<MatrixXd> qr(aw.transpose());
      q_full = qr.householderQ() * MatrixXd::Identity(n, n);
      r_thin = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    }

    VectorXd p = VectorXd::Zero(n);
    if (k < n) {
      MatrixXd z = q_full.rightCols(n - k);
      VectorXd zg = z.transpose() * g;
      if (ph.H) {
        MatrixXd hr = z.transpose() * (*ph.H) * z;
        Eigen::LLT<MatrixXd> llt(hr);
        if (llt.info() != Eigen::Success) throw NumericalFailure("reduced Hessian is not positive definite");
        p = -z * llt.solve(zg);
      } else {
        p = -z * zg;
      }
    }

    const double gscale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
    const double xscale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    const bool stationary = ph.H ? p.lpNorm<Eigen::Infinity>() <= 1e-12 * xscale
                                 : p.lpNorm<Eigen::Infinity>() <= ph.opt_tol * 1e-3 * gscale;

    if (stationary) {
      VectorXd y = VectorXd::Zero(k);
      if (k > 0) {
        VectorXd rhs = -(q_full.leftCols(k).transpose() * g);
        y = r_thin.triangularView<Eigen::Upper>().solve(rhs);
      }
      int drop = -1;
      for (int w = 0; w < k; ++w) {
        if (ph.rows.is_eq[work[w]]) continue;
        if (y(w) < -ph.opt_tol * gscale) {
          drop = w;  // smallest row index, since work is sorted
          break;
        }
      }
      if (drop < 0) {
        out.y = y;
        return out;
      }
      work.erase(work.begin() + drop);
      continue;
    }

    double alpha = ph.H ? 1.0 : std::numeric_limits<double>::infinity();
    int block = -1;
    const double pnorm = p.norm();
    for (int i = 0; i < m; ++i) {
      if (ph.rows.skip[i] || ph.rows.is_eq[i]) continue;
      if (std::binary_search(work.begin(), work.end(), i)) continue;
      const double ap = A.row(i).dot(p);
      if (ap <= 1e-13 * std::max(1.0, A.row(i).norm()) * pnorm) continue;
      const double slack = std::max(0.0, r(i) - A.row(i).dot(x));
      const double a = slack / ap;
      if (a < alpha) {
        alpha = a;
        block = i;
      }
    }
    if (!std::isfinite(alpha)) throw Unbounded("objective is unbounded below");
    x += alpha * p;
    if (block >= 0) work.insert(std::upper_bound(work.begin(), work.end(), block), block);
  }
  throw NumericalFailure("active-set iteration limit reached");
}

std::vector<int> initial_working_set(const Rows& rows, const VectorXd& x, double tol) {
  std::vector<int> work;
  MatrixXd basis(0, rows.A.cols());
  auto try_add = [&](int i) {
    if (static_cast<int>(work.size()) >= rows.A.cols()) return;
    if (!independent_of(basis, rows.A.row(i), 1e-10)) return;
    work.push_back(i);
    basis.conservativeResize(basis.rows() + 1, Eigen::NoChange);
    basis.row(basis.rows() - 1) = rows.A.row(i);
  };
  for (int i = 0; i < rows.A.rows(); ++i)
    if (!rows.skip[i] && rows.is_eq[i]) try_add(i);
  for (int i = 0; i < rows.A.rows(); ++i) {
    if (rows.skip[i] || rows.is_eq[i]) continue;
    if (std::abs(rows.r(i) - rows.A.row(i).dot(x)) <= tol) try_add(i);
  }
  std::sort(work.begin(), work.end());
  return work;
}

}  // namespace

bool rows_independent(const MatrixXd& A, const std::vector<int>& rows, double tol) {
  if (rows.empty()) return true;
  if (static_cast<int>(rows.size()) > A.cols()) return false;
  MatrixXd sub = gather(A, rows);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(sub.transpose());
  qr.setThreshold(tol);
  return qr.rank() == static_cast<Eigen::Index>(rows.size());
}

Result solve(const Problem& problem, const Options& options) {
  const int n = problem.variables();
  const int m = problem.rows();
  if (problem.rhs.size() != m) throw InvalidInput("qp: rhs size does not match A");
  if (problem.linear.size() != n) throw InvalidInput("qp: linear term size does not match A");
  if (!problem.is_linear() && (problem.hessian.rows() != n || problem.hessian.cols() != n))
    throw InvalidInput("qp: Hessian size does not match A");
  if (!problem.twin.empty() && static_cast<int>(problem.twin.size()) != m)
    throw InvalidInput("qp: twin map size does not match A");

  const double rscale = std::max(1.0, m > 0 ? problem.rhs.lpNorm<Eigen::Infinity>() : 0.0);
  const double feas_tol = options.feasibility_tol * rscale;

  Rows rows{problem.A, problem.rhs, std::vector<char>(m, 0), std::vector<char>(m, 0)};
  for (int i = 0; i < m; ++i) {
    if (problem.A.row(i).lpNorm<Eigen::Infinity>() == 0.0) {
      if (problem.rhs(i) < -feas_tol) throw Infeasible("constant constraint row is violated");
      rows.skip[i] = 1;
    }
  }
  if (!problem.twin.empty()) {
    for (int i = 0; i < m; ++i) {
      const int j = problem.twin[i];
      if (j <= i || rows.skip[i]) continue;
      const double gap = problem.rhs(i) + problem.rhs(j);
      if (gap < -feas_tol) throw Infeasible("range constraint with lower bound above upper bound");
      if (gap <= feas_tol) {
        rows.is_eq[i] = 1;
        rows.skip[j] = 1;
      }
    }
  }

  const MatrixXd* H = problem.is_linear() ? nullptr : &problem.hessian;
  if (H) {
    Eigen::LLT<MatrixXd> llt(*H);
    if (llt.info() != Eigen::Success) throw InvalidInput("qp: Hessian is not positive definite");
  }

  // Start from the least-norm point of the equality rows.
  std::vector<int> eq;
  for (int i = 0; i < m; ++i)
    if (rows.is_eq[i]) eq.push_back(i);
  VectorXd x = VectorXd::Zero(n);
  if (!eq.empty()) {
    MatrixXd ae = gather(problem.A, eq);
    VectorXd re(eq.size());
    for (std::size_t k = 0; k < eq.size(); ++k) re(k) = problem.rhs(eq[k]);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(ae);
    x = cod.solve(re);
    if ((ae * x - re).lpNorm<Eigen::Infinity>() > feas_tol) throw Infeasible("equality rows are inconsistent");
  }

  int total_iterations = 0;
  double violation = 0.0;
  for (int i = 0; i < m; ++i) {
    if (rows.skip[i] || rows.is_eq[i]) continue;
    violation = std::max(violation, problem.A.row(i).dot(x) - problem.rhs(i));
  }

  if (violation > feas_tol) {
    // Phase 1: min s  s.t.  A x - s <= r (inequalities), A x = r (equalities), s >= 0.
    MatrixXd a1 = MatrixXd::Zero(m + 1, n + 1);
    VectorXd r1 = VectorXd::Zero(m + 1);
    a1.topLeftCorner(m, n) = problem.A;
    r1.head(m) = problem.rhs;
    for (int i = 0; i < m; ++i)
      if (!rows.is_eq[i] && !rows.skip[i]) a1(i, n) = -1.0;
    a1(m, n) = -1.0;
    Rows rows1{a1, r1, rows.is_eq, rows.skip};
    rows1.is_eq.push_back(0);
    rows1.skip.push_back(0);
    VectorXd q1 = VectorXd::Zero(n + 1);
    q1(n) = 1.0;
    VectorXd x1(n + 1);
    x1.head(n) = x;
    x1(n) = violation;
    std::vector<int> work1 = initial_working_set(rows1, x1, feas_tol);
    Phase ph1{rows1, nullptr, q1, feas_tol, options.optimality_tol, options.max_iterations};
    auto o1 = run_phase(ph1, x1, work1);
    total_iterations += o1.iterations;
    if (x1(n) > 10.0 * feas_tol) throw Infeasible("no point satisfies the constraints");
    x = x1.head(n);
  }

  std::vector<int> work = initial_working_set(rows, x, feas_tol);
  Phase ph{rows, H, problem.linear, feas_tol, options.optimality_tol, options.max_iterations};
  auto o2 = run_phase(ph, x, work);
  total_iterations += o2.iterations;

  Result res;
  res.x = x;
  res.iterations = total_iterations;
  res.multipliers = VectorXd::Zero(m);
  for (std::size_t w = 0; w < work.size(); ++w) {
    const int i = work[w];
    const double y = o2.y(w);
    if (rows.is_eq[i]) {
      res.multipliers(i) = std::max(y, 0.0);
      res.multipliers(problem.twin[i]) = std::max(-y, 0.0);
    } else {
      res.multipliers(i) = std::max(y, 0.0);
    }
  }
  for (int i : work) {
    res.working_set.push_back(i);
    if (rows.is_eq[i]) res.working_set.push_back(problem.twin[i]);
  }
  std::sort(res.working_set.begin(), res.working_set.end());
  res.objective = problem.linear.dot(x);
  if (H) res.objective += 0.5 * x.dot((*H) * x);
  return res;
}

}  // namespace lmpf::qp
