#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lmpf::qp {

/// min 0.5 x'Hx + q'x  subject to  A x <= rhs.
///
/// An empty `hessian` means a linear program. A non-empty one must be
/// positive definite. `twin[i] == j` declares row j to be the exact negation
/// of row i; when rhs[i] + rhs[j] == 0 the pair is handled as one equality
/// row, otherwise as a range.
struct Problem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  std::vector<int> twin;

  bool is_linear() const { return hessian.size() == 0; }
  int variables() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
};

struct Options {
  int max_iterations = 1000;
  double feasibility_tol = 1e-9;  // relative to max(1, |rhs|_inf)
  double optimality_tol = 1e-9;   // relative to max(1, |gradient|_inf)
};

struct Result {
  Eigen::VectorXd x;
  /// One non-negative multiplier per row; equality pairs are split into
  /// their positive and negative parts.
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  /// Sorted rows of the final working set. Both rows of an equality pair appear.
  std::vector<int> working_set;
  int iterations = 0;
};

/// Dense primal active-set method with a phase-1 feasibility LP and Bland's
/// smallest-index rule for entering and leaving constraints.
/// Throws Infeasible, Unbounded, or NumericalFailure.
Result solve(const Problem& problem, const Options& options = {});

/// Is `rows` (a subset of A's rows) linearly independent?
bool rows_independent(const Eigen::MatrixXd& A, const std::vector<int>& rows, double tol = 1e-10);

}  // namespace lmpf::qp
