#include "lmpf/mpp.hpp"

#include <algorithm>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd MppProblem::withdrawals(const VectorXd& theta) const {
  VectorXd d = fixed_withdrawals;
  for (int j = 0; j < parameter_count(); ++j) d(parameter_bus[j]) += parameter_sign(j) * theta(j);
  return d;
}

VectorXd MppProblem::line_flows(const VectorXd& g, const VectorXd& theta) const {
  if (shift_factors.size() == 0) return VectorXd::Zero(line_count());
  VectorXd inj = -withdrawals(theta);
  for (int k = 0; k < decision_count(); ++k) inj(generator_bus[k]) += g(k);
  return shift_factors * inj;
}

double MppProblem::cost(const VectorXd& g) const {
  double c = linear_cost.dot(g);
  if (is_quadratic()) c += 0.5 * g.dot(hessian * g);
  return c;
}

MppProblem build_mpp(const SystemSnapshot& snapshot) {
  const GridCase& grid = snapshot.grid;
  VectorXd lo(grid.parameter_count()), hi(grid.parameter_count());
  for (int j = 0; j < grid.parameter_count(); ++j) {
    lo(j) = grid.stochastic_units[j].min;
    hi(j) = grid.stochastic_units[j].max;
  }
  return build_mpp(snapshot, lo, hi);
}

MppProblem build_mpp(const SystemSnapshot& snapshot, const VectorXd& box_lo, const VectorXd& box_hi) {
  const GridCase& grid = snapshot.grid;
  const MatrixXd& s = snapshot.shift_factors;
  const int nb = grid.bus_count;
  const int ng = static_cast<int>(grid.generators.size());
  const int np = grid.parameter_count();
  const int nl = static_cast<int>(grid.lines.size());

  if (box_lo.size() != np || box_hi.size() != np) throw InvalidInput("parameter box dimension mismatch");
  for (int j = 0; j < np; ++j)
    if (!(box_lo(j) <= box_hi(j))) throw InvalidInput("parameter box is empty (lower bound above upper bound)");

  MppProblem p;
  p.cost_kind = grid.cost_kind;
  p.bus_count = nb;
  p.shift_factors = s;
  p.box_lo = box_lo;
  p.box_hi = box_hi;
  p.fixed_withdrawals = grid.fixed_withdrawals();

  MatrixXd gen_inc = MatrixXd::Zero(nb, ng);
  p.linear_cost.resize(ng);
  for (int k = 0; k < ng; ++k) {
    const auto& g = grid.generators[k];
    gen_inc(g.bus - 1, k) = 1.0;
    p.generator_bus.push_back(g.bus - 1);
    p.linear_cost(k) = g.linear_cost;
  }
  if (grid.cost_kind == CostKind::Quadratic) {
    p.hessian = MatrixXd::Zero(ng, ng);
    for (int k = 0; k < ng; ++k) p.hessian(k, k) = grid.generators[k].quadratic_cost;
  }

  MatrixXd par_inc = MatrixXd::Zero(nb, np);
  p.parameter_sign.resize(np);
  for (int j = 0; j < np; ++j) {
    const auto& u = grid.stochastic_units[j];
    par_inc(u.bus - 1, j) = u.withdrawal_sign();
    p.parameter_bus.push_back(u.bus - 1);
    p.parameter_sign(j) = u.withdrawal_sign();
  }

  std::vector<int> live;
  for (int l = 0; l < nl; ++l)
    if (grid.lines[l].in_service) live.push_back(l);
  const int nlive = static_cast<int>(live.size());
  const int m = 2 + 2 * nlive + 2 * ng;

  p.A = MatrixXd::Zero(m, ng);
  p.b = VectorXd::Zero(m);
  p.E = MatrixXd::Zero(m, np);
  p.rows.resize(m);
  p.twin.assign(m, -1);
  p.line_upper_row.assign(nl, -1);
  p.line_lower_row.assign(nl, -1);
  for (const auto& l : grid.lines) {
    p.line_limit_min.push_back(l.limit_min);
    p.line_limit_max.push_back(l.limit_max);
  }

  const VectorXd d = p.fixed_withdrawals;
  const double total_fixed = d.sum();

  p.A.row(0).setOnes();
  p.b(0) = total_fixed;
  p.E.row(0) = VectorXd::Ones(nb).transpose() * par_inc;
  p.rows[0] = {RowKind::BalanceUpper, -1};
  p.A.row(1) = -p.A.row(0);
  p.b(1) = -p.b(0);
  p.E.row(1) = -p.E.row(0);
  p.rows[1] = {RowKind::BalanceLower, -1};
  p.twin[0] = 1;
  p.twin[1] = 0;

  const MatrixXd sg = s * gen_inc;
  const MatrixXd sp = s * par_inc;
  const VectorXd sd = s * d;
  for (int k = 0; k < nlive; ++k) {
    const int l = live[k];
    const int up = 2 + k;
    const int dn = 2 + nlive + k;
    p.A.row(up) = sg.row(l);
    p.b(up) = grid.lines[l].limit_max + sd(l);
    p.E.row(up) = sp.row(l);
    p.rows[up] = {RowKind::LineUpper, l};
    p.A.row(dn) = -sg.row(l);
    p.b(dn) = -grid.lines[l].limit_min - sd(l);
    p.E.row(dn) = -sp.row(l);
    p.rows[dn] = {RowKind::LineLower, l};
    p.twin[up] = dn;
    p.twin[dn] = up;
    p.line_upper_row[l] = up;
    p.line_lower_row[l] = dn;
  }
  for (int k = 0; k < ng; ++k) {
    const int up = 2 + 2 * nlive + k;
    const int dn = 2 + 2 * nlive + ng + k;
    p.A(up, k) = 1.0;
    p.b(up) = grid.generators[k].p_max;
    p.rows[up] = {RowKind::GenUpper, k};
    p.A(dn, k) = -1.0;
    p.b(dn) = -grid.generators[k].p_min;
    p.rows[dn] = {RowKind::GenLower, k};
    p.twin[up] = dn;
    p.twin[dn] = up;
  }

  p.price_map = MatrixXd::Zero(nb, m);
  p.price_map.col(0).setConstant(-1.0);
  p.price_map.col(1).setConstant(1.0);
  for (int l = 0; l < nl; ++l) {
    if (p.line_upper_row[l] < 0) continue;
    p.price_map.col(p.line_upper_row[l]) = -s.row(l).transpose();
    p.price_map.col(p.line_lower_row[l]) = s.row(l).transpose();
  }
  return p;
}

AffineSolution affine_solution(const MppProblem& p, const ActiveSet& active) {
  const int n = p.decision_count();
  const int np = p.parameter_count();
  const int m = p.row_count();

  AffineSolution sol;
  sol.active = active;
  std::vector<int> eff;  // rows kept in the KKT block
  for (int i : active.rows) {
    if (i < 0 || i >= m) throw InvalidInput("active set index out of range");
    const int t = p.twin[i];
    const bool pair_active = t >= 0 && std::binary_search(active.rows.begin(), active.rows.end(), t);
    if (pair_active && t < i) continue;  // second row of an equality pair
    if (pair_active) sol.equality_rows.push_back(i);
    eff.push_back(i);
  }
  const int k = static_cast<int>(eff.size());
  MatrixXd ab(k, n), eb(k, np);
  VectorXd bb(k);
  for (int r = 0; r < k; ++r) {
    ab.row(r) = p.A.row(eff[r]);
    eb.row(r) = p.E.row(eff[r]);
    bb(r) = p.b(eff[r]);
  }

  MatrixXd yb_gain(k, np);
  VectorXd yb_off(k);
  if (!p.is_quadratic()) {
    if (k != n) throw Degenerate("linear-cost active set is not a basis (" + std::to_string(k) + " rows, " +
                                 std::to_string(n) + " variables)");
    Eigen::FullPivLU<MatrixXd> lu(ab);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) throw Degenerate("active constraint block is singular");
    sol.primal_gain = lu.solve(eb);
    sol.primal_offset = lu.solve(bb);
    Eigen::FullPivLU<MatrixXd> lut(ab.transpose());
    yb_off = lut.solve(VectorXd(-p.linear_cost));
    yb_gain.setZero();
  } else {
    Eigen::LLT<MatrixXd> hllt(p.hessian);
    if (hllt.info() != Eigen::Success) throw InvalidInput("Hessian is not positive definite");
    const MatrixXd hinv = hllt.solve(MatrixXd::Identity(n, n));
    if (k > 0) {
      const MatrixXd m_block = ab * hinv * ab.transpose();
      Eigen::FullPivLU<MatrixXd> lu(m_block);
      lu.setThreshold(1e-10);
      if (!lu.isInvertible()) throw Degenerate("active rows are linearly dependent");
      yb_gain = -lu.solve(eb);
      yb_off = -lu.solve(VectorXd(bb + ab * hinv * p.linear_cost));
      sol.primal_gain = -hinv * ab.transpose() * yb_gain;
      sol.primal_offset = -hinv * (p.linear_cost + ab.transpose() * yb_off);
    } else {
      sol.primal_gain = MatrixXd::Zero(n, np);
      sol.primal_offset = -hinv * p.linear_cost;
    }
  }

  sol.dual_gain = MatrixXd::Zero(m, np);
  sol.dual_offset = VectorXd::Zero(m);
  for (int r = 0; r < k; ++r) {
    sol.dual_gain.row(eff[r]) = yb_gain.row(r);
    sol.dual_offset(eff[r]) = yb_off(r);
  }
  if (p.price_map.cols() == m) {
    sol.price_gain = p.price_map * sol.dual_gain;
    sol.price_offset = p.price_map * sol.dual_offset;
  } else {
    sol.price_gain = MatrixXd::Zero(0, np);
    sol.price_offset = VectorXd::Zero(0);
  }
  return sol;
}

}  // namespace lmpf
