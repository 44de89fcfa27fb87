#include "lmpf/opf.hpp"

#include <algorithm>
#include <cmath>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// One KKT row of a candidate basis: a single inequality, or an equality pair
// (first row + its twin).
struct Unit {
  int row = 0;
  int partner = -1;
  bool equality() const { return partner >= 0; }
};

std::vector<int> merged_rows(const std::vector<Unit>& units) {
  std::vector<int> rows;
  for (const auto& u : units) {
    rows.push_back(u.row);
    if (u.equality()) rows.push_back(u.partner);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

struct BasisCheck {
  const MppProblem& p;
  const VectorXd& rhs;
  const VectorXd& x_star;
  double tol;

  bool valid(const std::vector<Unit>& units) const {
    const int n = p.decision_count();
    const int k = static_cast<int>(units.size());
    MatrixXd ab(k, n);
    VectorXd bb(k);
    for (int r = 0; r < k; ++r) {
      ab.row(r) = p.A.row(units[r].row);
      bb(r) = rhs(units[r].row);
    }
    const double xscale = std::max(1.0, x_star.lpNorm<Eigen::Infinity>());
    const double cscale = std::max(1.0, p.linear_cost.lpNorm<Eigen::Infinity>());
    VectorXd x, y;
    if (!p.is_quadratic()) {
      if (k != n) return false;
      Eigen::FullPivLU<MatrixXd> lu(ab);
      lu.setThreshold(1e-10);
      if (!lu.isInvertible()) return false;
      x = lu.solve(bb);
      y = ab.transpose().fullPivLu().solve(VectorXd(-p.linear_cost));
    } else {
      if (!qp::rows_independent(ab, [&] {
            std::vector<int> all(k);
            for (int r = 0; r < k; ++r) all[r] = r;
            return all;
          }()))
        return false;
      Eigen::LLT<MatrixXd> hllt(p.hessian);
      const MatrixXd hinv_at = hllt.solve(ab.transpose());
      const VectorXd hinv_q = hllt.solve(p.linear_cost);
      if (k > 0) {
        const MatrixXd m = ab * hinv_at;
        y = -m.ldlt().solve(VectorXd(bb + ab * hinv_q));
        x = -hinv_q - hinv_at * y;
      } else {
        y = VectorXd();
        x = -hinv_q;
      }
    }
    if ((x - x_star).lpNorm<Eigen::Infinity>() > 1e-7 * xscale) return false;
    for (int r = 0; r < k; ++r)
      if (!units[r].equality() && y(r) < -tol * cscale) return false;
    return true;
  }
};

bool independent_units(const MppProblem& p, const std::vector<Unit>& units) {
  std::vector<int> rows;
  for (const auto& u : units) rows.push_back(u.row);
  return qp::rows_independent(p.A, rows);
}

// Lexicographically smallest valid basis among units that contain every
// forced unit. Returns false if none was found within the node budget.
bool select_basis(const MppProblem& p, const std::vector<Unit>& forced, const std::vector<Unit>& optional,
                  const BasisCheck& check, long long max_nodes, std::vector<Unit>& best) {
  const int n = p.decision_count();
  const bool linear = !p.is_quadratic();
  const int need = linear ? n - static_cast<int>(forced.size()) : -1;
  if (linear && (need < 0 || need > static_cast<int>(optional.size()))) return false;
  if (!independent_units(p, forced)) return false;

  long long nodes = 0;
  bool found = false;
  std::vector<int> best_rows;
  std::vector<Unit> chosen = forced;

  // Pre-order DFS visits subsets of `optional` in lexicographic order.
  auto dfs = [&](auto&& self, int start) -> bool {
    if (++nodes > max_nodes) return true;
    const int extra = static_cast<int>(chosen.size() - forced.size());
    const bool complete = linear ? extra == need : true;
    if (complete && check.valid(chosen)) {
      std::vector<int> rows = merged_rows(chosen);
      if (!found || std::lexicographical_compare(rows.begin(), rows.end(), best_rows.begin(), best_rows.end())) {
        found = true;
        best_rows = rows;
        best = chosen;
      }
      if (linear) return true;
    }
    if (linear && extra == need) return false;
    for (int i = start; i < static_cast<int>(optional.size()); ++i) {
      if (linear && static_cast<int>(optional.size()) - i < need - extra) break;
      chosen.push_back(optional[i]);
      if (independent_units(p, chosen) && self(self, i + 1)) {
        chosen.pop_back();
        return true;
      }
      chosen.pop_back();
    }
    return false;
  };
  dfs(dfs, 0);
  return found;
}

DispatchSolution assemble(const MppProblem& p, const VectorXd& theta, const VectorXd& g, const VectorXd& y) {
  DispatchSolution sol;
  sol.theta = theta;
  sol.g = g;
  sol.objective = p.cost(g);
  sol.multipliers = y;
  const int nl = p.line_count();
  const int ng = p.decision_count();
  sol.lambda = 0.0;
  sol.mu_upper = VectorXd::Zero(nl);
  sol.mu_lower = VectorXd::Zero(nl);
  sol.gen_upper_dual = VectorXd::Zero(ng);
  sol.gen_lower_dual = VectorXd::Zero(ng);
  for (int i = 0; i < static_cast<int>(p.rows.size()); ++i) {
    const RowInfo& info = p.rows[i];
    switch (info.kind) {
      case RowKind::BalanceUpper: sol.lambda -= y(i); break;
      case RowKind::BalanceLower: sol.lambda += y(i); break;
      case RowKind::LineUpper: sol.mu_upper(info.element) = y(i); break;
      case RowKind::LineLower: sol.mu_lower(info.element) = y(i); break;
      case RowKind::GenUpper: sol.gen_upper_dual(info.element) = y(i); break;
      case RowKind::GenLower: sol.gen_lower_dual(info.element) = y(i); break;
    }
  }
  sol.flows = p.line_flows(g, theta);
  sol.lmp = extract_lmp(sol, p.shift_factors);
  return sol;
}

double max_violation(const MppProblem& p, const VectorXd& rhs, const VectorXd& g) {
  if (p.row_count() == 0) return 0.0;
  return (p.A * g - rhs).maxCoeff();
}

}  // namespace

std::vector<int> tight_rows(const MppProblem& p, const VectorXd& theta, const VectorXd& g, double tol) {
  const VectorXd rhs = p.rhs(theta);
  std::vector<int> out;
  for (int i = 0; i < p.row_count(); ++i) {
    const double slack = rhs(i) - p.A.row(i).dot(g);
    if (slack <= tol * std::max(1.0, std::abs(rhs(i)))) out.push_back(i);
  }
  return out;
}

DispatchSolution evaluate_affine(const MppProblem& p, const AffineSolution& affine, const VectorXd& theta) {
  const VectorXd g = affine.primal(theta);
  const VectorXd signed_y = affine.duals(theta);
  VectorXd y = signed_y.cwiseMax(0.0);
  for (int i : affine.equality_rows) {
    y(i) = std::max(signed_y(i), 0.0);
    y(p.twin[i]) = std::max(-signed_y(i), 0.0);
  }
  DispatchSolution sol = assemble(p, theta, g, y);
  sol.active = affine.active;
  return sol;
}

DispatchSolution solve_dcopf(const MppProblem& p, const VectorXd& theta, const SolveOptions& options) {
  if (theta.size() != p.parameter_count())
    throw InvalidInput("parameter vector has " + std::to_string(theta.size()) + " entries, expected " +
                       std::to_string(p.parameter_count()));
  qp::Problem prob;
  prob.hessian = p.hessian;
  prob.linear = p.linear_cost;
  prob.A = p.A;
  prob.rhs = p.rhs(theta);
  prob.twin = p.twin;
  const qp::Result res = qp::solve(prob, options.qp);

  const std::vector<int> tight = tight_rows(p, theta, res.x, options.basis_tol);
  std::vector<Unit> forced, optional;
  for (int i : tight) {
    const int t = p.twin[i];
    const bool pair = t >= 0 && std::binary_search(tight.begin(), tight.end(), t);
    if (pair && t < i) continue;
    if (pair)
      forced.push_back({i, t});
    else
      optional.push_back({i, -1});
  }

  BasisCheck check{p, prob.rhs, res.x, options.binding_tol};
  std::vector<Unit> basis;
  bool have_basis = false;

  // Fast path: the solver's working set already uses every tight row.
  std::vector<int> all_tight_rows = merged_rows([&] {
    std::vector<Unit> u = forced;
    u.insert(u.end(), optional.begin(), optional.end());
    return u;
  }());
  if (all_tight_rows == res.working_set) {
    std::vector<Unit> all = forced;
    all.insert(all.end(), optional.begin(), optional.end());
    bool unique = !p.is_quadratic() || [&] {
      const double cscale = std::max(1.0, p.linear_cost.lpNorm<Eigen::Infinity>());
      for (const auto& u : optional)
        if (res.multipliers(u.row) <= options.binding_tol * cscale) return false;
      return true;
    }();
    if (unique && check.valid(all)) {
      basis = all;
      have_basis = true;
    }
  }
  if (!have_basis) have_basis = select_basis(p, forced, optional, check, options.max_basis_nodes, basis);

  std::vector<int> rows;
  if (have_basis) {
    rows = merged_rows(basis);
  } else {
    rows = res.working_set;
  }
  const std::size_t basis_size = have_basis ? basis.size() : rows.size();

  try {
    const AffineSolution aff = affine_solution(p, ActiveSet{rows});
    DispatchSolution sol = evaluate_affine(p, aff, theta);
    const double scale = std::max(1.0, prob.rhs.lpNorm<Eigen::Infinity>());
    if (max_violation(p, prob.rhs, sol.g) <= 1e-7 * scale) {
      sol.tight = tight;
      sol.degenerate = forced.size() + optional.size() > basis_size;
      return sol;
    }
  } catch (const Degenerate&) {
  }

  DispatchSolution sol = assemble(p, theta, res.x, res.multipliers);
  sol.active = ActiveSet{res.working_set};
  sol.tight = tight;
  sol.degenerate = true;
  sol.from_basis = false;
  return sol;
}

DispatchSolution solve_dcopf(const SystemSnapshot& snapshot, const VectorXd& theta, const SolveOptions& options) {
  return solve_dcopf(build_mpp(snapshot), theta, options);
}

VectorXd extract_lmp(const DispatchSolution& sol, const MatrixXd& shift_factors) {
  if (sol.mu_upper.size() != shift_factors.rows() || sol.mu_lower.size() != shift_factors.rows())
    throw InvalidInput("line multipliers do not match the shift factor matrix");
  VectorXd pi = VectorXd::Constant(shift_factors.cols(), sol.lambda);
  pi.noalias() -= shift_factors.transpose() * sol.mu_upper;
  pi.noalias() += shift_factors.transpose() * sol.mu_lower;
  return pi;
}

namespace {

CongestionPattern classify(const VectorXd& flows, const std::vector<double>& lo, const std::vector<double>& hi,
                           const std::vector<bool>& live, double tol) {
  CongestionPattern out(flows.size(), 0);
  for (int l = 0; l < flows.size(); ++l) {
    if (!live[l]) continue;
    if (std::abs(flows(l) - hi[l]) <= tol * std::max(1.0, std::abs(hi[l])))
      out[l] = 1;
    else if (std::abs(flows(l) - lo[l]) <= tol * std::max(1.0, std::abs(lo[l])))
      out[l] = -1;
  }
  return out;
}

}  // namespace

CongestionPattern extract_congestion(const DispatchSolution& sol, const MppProblem& p, double tol) {
  std::vector<bool> live(p.line_count());
  for (int l = 0; l < p.line_count(); ++l) live[l] = p.line_upper_row[l] >= 0;
  return classify(sol.flows, p.line_limit_min, p.line_limit_max, live, tol);
}

CongestionPattern extract_congestion(const DispatchSolution& sol, const SystemSnapshot& snapshot, double tol) {
  const auto& lines = snapshot.grid.lines;
  std::vector<double> lo, hi;
  std::vector<bool> live;
  for (const auto& l : lines) {
    lo.push_back(l.limit_min);
    hi.push_back(l.limit_max);
    live.push_back(l.in_service);
  }
  if (sol.flows.size() != static_cast<int>(lines.size())) throw InvalidInput("flow vector does not match the case");
  return classify(sol.flows, lo, hi, live, tol);
}

ActiveSet optimal_partition(const MppProblem& p, const VectorXd& theta, const DispatchSolution& sol) {
  if (sol.g.size() != p.decision_count() || theta.size() != p.parameter_count())
    throw InvalidInput("solution does not match the program dimensions");
  const VectorXd rhs = p.rhs(theta);
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (max_violation(p, rhs, sol.g) > 1e-7 * scale) throw InvalidInput("solution is not feasible at this parameter");
  for (int i : sol.active.rows) {
    if (i < 0 || i >= p.row_count()) throw InvalidInput("active row out of range");
    if (rhs(i) - p.A.row(i).dot(sol.g) > 1e-7 * std::max(1.0, std::abs(rhs(i))))
      throw InvalidInput("active row is not tight at the solution");
  }
  return sol.active;
}

}  // namespace lmpf
