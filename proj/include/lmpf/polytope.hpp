#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace lmpf {

/// Closed polyhedron { theta : C theta <= e }.
struct Polytope {
  Eigen::MatrixXd C;
  Eigen::VectorXd e;

  int dim() const { return static_cast<int>(C.cols()); }
  int rows() const { return static_cast<int>(C.rows()); }
  /// max_i (C_i theta - e_i) / |C_i|; non-positive inside.
  double violation(const Eigen::VectorXd& theta) const;
  bool contains(const Eigen::VectorXd& theta, double tol = 1e-9) const;

  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  Polytope intersect(const Polytope& other) const;
};

struct Ball {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Largest inscribed ball, radius capped at `radius_cap` for unbounded sets.
/// Returns nullopt when the polytope is empty.
std::optional<Ball> chebyshev_center(const Polytope& p, double radius_cap = 1e6);

struct Reduction {
  Polytope polytope;        // unit-norm rows, minimal
  std::vector<int> kept;    // source row of each surviving row
  bool empty = false;
  bool has_interior = false;
};

/// Removes zero, duplicate and redundant rows. Each removal is certified by an
/// LP maximizing the row over the remaining rows.
Reduction reduce_halfspaces(const Polytope& p, double tol = 1e-9);

/// Removes zero and duplicate rows only (no LPs).
Polytope normalize_rows(const Polytope& p, bool* infeasible = nullptr);

/// Inscribed-ball center of facet `row` within its hyperplane.
std::optional<Ball> facet_center(const Polytope& p, int row, double radius_cap = 1e6);

/// Vertices of a bounded polytope by enumerating dim-subsets of rows.
/// Returns nullopt if more than `max_combinations` subsets would be examined.
std::optional<std::vector<Eigen::VectorXd>> enumerate_vertices(const Polytope& p,
                                                               long long max_combinations = 2'000'000,
                                                               double tol = 1e-9);

struct Anchor {
  Eigen::VectorXd point;
  bool chebyshev_fallback = false;
};

/// Mean of vertices when dim <= dim_budget, otherwise the Chebyshev center.
/// Throws EmptyRegion for an empty polytope.
Anchor region_anchor(const Polytope& p, int dim_budget = 6);

/// min c'x s.t. A x <= b (twin rows as in qp::Problem). Returns the minimizer.
Eigen::VectorXd lp_minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const std::vector<int>& twin = {});

}  // namespace lmpf
