#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lmpf/network.hpp"
#include "lmpf/polytope.hpp"

namespace lmpf {

enum class RowKind { BalanceUpper, BalanceLower, LineUpper, LineLower, GenUpper, GenLower };

struct RowInfo {
  RowKind kind = RowKind::BalanceUpper;
  int element = -1;  // line index or generator index; -1 for balance rows
};

/// Right-hand-side multiparametric dispatch:  min cost(g)  s.t.  A g <= b + E theta.
///
/// Rows come in the order balance(+,-), line(+) for every in-service line,
/// line(-) likewise, generator(+), generator(-). Theta holds one MW value per
/// stochastic unit, entering the withdrawal at its bus with the unit's sign.
struct MppProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd E;

  CostKind cost_kind = CostKind::Linear;
  Eigen::VectorXd linear_cost;  // per generator
  Eigen::MatrixXd hessian;      // empty for linear cost

  Eigen::VectorXd box_lo;
  Eigen::VectorXd box_hi;

  std::vector<RowInfo> rows;
  std::vector<int> twin;  // negated partner row, -1 if none

  // Bookkeeping for prices and flows.
  int bus_count = 0;
  Eigen::MatrixXd shift_factors;       // all lines x buses (zero rows for outages)
  std::vector<int> line_upper_row;     // per line, -1 when out of service
  std::vector<int> line_lower_row;
  std::vector<double> line_limit_min;  // per line
  std::vector<double> line_limit_max;
  std::vector<int> generator_bus;      // 0-based bus per generator
  std::vector<int> parameter_bus;      // 0-based bus per parameter
  Eigen::VectorXd parameter_sign;      // +1 load, -1 generation
  Eigen::VectorXd fixed_withdrawals;   // per bus
  Eigen::MatrixXd price_map;           // buses x rows, LMP = price_map * signed multipliers

  int decision_count() const { return static_cast<int>(A.cols()); }
  int parameter_count() const { return static_cast<int>(E.cols()); }
  int row_count() const { return static_cast<int>(A.rows()); }
  int line_count() const { return static_cast<int>(line_upper_row.size()); }
  bool is_quadratic() const { return cost_kind == CostKind::Quadratic; }

  Eigen::VectorXd rhs(const Eigen::VectorXd& theta) const { return b + E * theta; }
  Polytope box() const { return Polytope::box(box_lo, box_hi); }
  Eigen::VectorXd box_center() const { return 0.5 * (box_lo + box_hi); }
  double box_diagonal() const { return (box_hi - box_lo).norm(); }
  /// Net withdrawal per bus at parameter theta.
  Eigen::VectorXd withdrawals(const Eigen::VectorXd& theta) const;
  /// Line flows (all lines, MW) for dispatch g at theta.
  Eigen::VectorXd line_flows(const Eigen::VectorXd& g, const Eigen::VectorXd& theta) const;
  double cost(const Eigen::VectorXd& g) const;
};

/// Builds the stacked program. The parameter box defaults to each
/// stochastic unit's [min, max]. Throws InvalidInput for an empty box.
MppProblem build_mpp(const SystemSnapshot& snapshot);
MppProblem build_mpp(const SystemSnapshot& snapshot, const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi);

/// Sorted constraint indices tight at an optimum.
struct ActiveSet {
  std::vector<int> rows;
  bool operator==(const ActiveSet&) const = default;
  auto operator<=>(const ActiveSet&) const = default;
};

/// Optimizer and multipliers as affine functions of theta for a fixed active
/// set:  x(theta) = X theta + x0,  y(theta) = Y theta + y0,  pi(theta) = U theta + v.
///
/// Multipliers are signed: for an equality pair (both twins active) the free
/// multiplier sits on the first row and the second row stays zero.
struct AffineSolution {
  ActiveSet active;
  std::vector<int> equality_rows;  // first row of each merged pair
  Eigen::MatrixXd primal_gain;
  Eigen::VectorXd primal_offset;
  Eigen::MatrixXd dual_gain;
  Eigen::VectorXd dual_offset;
  Eigen::MatrixXd price_gain;
  Eigen::VectorXd price_offset;

  Eigen::VectorXd primal(const Eigen::VectorXd& theta) const { return primal_gain * theta + primal_offset; }
  Eigen::VectorXd duals(const Eigen::VectorXd& theta) const { return dual_gain * theta + dual_offset; }
};

/// Closed-form solution of the KKT system restricted to `active`.
/// Linear cost needs a square invertible active block; quadratic cost needs
/// independent active rows. Throws Degenerate otherwise.
AffineSolution affine_solution(const MppProblem& p, const ActiveSet& active);

}  // namespace lmpf
