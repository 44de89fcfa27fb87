#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lmpf/active_set.hpp"
#include "lmpf/mpp.hpp"

namespace lmpf {

struct SolveOptions {
  /// Rows within this relative slack count as tight when choosing among
  /// optimal bases.
  double basis_tol = 1e-9;
  /// Relative tolerance for classifying binding lines and checking duals.
  double binding_tol = 1e-7;
  /// Limit on candidate bases examined by the tie-break search.
  long long max_basis_nodes = 100'000;
  qp::Options qp;
};

struct DispatchSolution {
  Eigen::VectorXd theta;
  Eigen::VectorXd g;  // MW per generator
  double objective = 0.0;
  double lambda = 0.0;             // energy-balance price
  Eigen::VectorXd mu_upper;        // per line
  Eigen::VectorXd mu_lower;        // per line
  Eigen::VectorXd gen_upper_dual;  // per generator
  Eigen::VectorXd gen_lower_dual;
  Eigen::VectorXd multipliers;     // per row, non-negative
  ActiveSet active;                // tie-broken optimal basis
  std::vector<int> tight;          // all rows tight at g
  Eigen::VectorXd flows;           // MW per line
  Eigen::VectorXd lmp;             // per bus
  bool degenerate = false;         // more than one optimal basis was available
  bool from_basis = true;          // false when the raw solver output was kept
};

/// Per-line status: +1 at the upper limit, -1 at the lower limit, 0 otherwise.
using CongestionPattern = std::vector<int>;

/// Solves the dispatch at parameter theta. Among optimal bases the
/// lexicographically smallest active set is selected and the reported
/// solution is the closed-form solution of that basis.
/// Throws Infeasible, Unbounded, NumericalFailure.
DispatchSolution solve_dcopf(const MppProblem& p, const Eigen::VectorXd& theta, const SolveOptions& options = {});
DispatchSolution solve_dcopf(const SystemSnapshot& snapshot, const Eigen::VectorXd& theta,
                             const SolveOptions& options = {});

/// Evaluates a basis's affine solution at theta. Direct solves and region
/// price maps both go through here, so their outputs agree bit for bit.
DispatchSolution evaluate_affine(const MppProblem& p, const AffineSolution& affine, const Eigen::VectorXd& theta);

/// pi = 1 lambda - S' mu_upper + S' mu_lower.
Eigen::VectorXd extract_lmp(const DispatchSolution& sol, const Eigen::MatrixXd& shift_factors);

/// Status per line with tolerance tol (MW, scaled by max(1, |limit|)).
CongestionPattern extract_congestion(const DispatchSolution& sol, const MppProblem& p, double tol = 1e-7);
CongestionPattern extract_congestion(const DispatchSolution& sol, const SystemSnapshot& snapshot,
                                     double tol = 1e-7);

/// The active set of `sol`, after checking that sol is feasible at theta.
ActiveSet optimal_partition(const MppProblem& p, const Eigen::VectorXd& theta, const DispatchSolution& sol);

/// Rows tight at dispatch g (relative slack <= tol).
std::vector<int> tight_rows(const MppProblem& p, const Eigen::VectorXd& theta, const Eigen::VectorXd& g,
                            double tol);

}  // namespace lmpf
