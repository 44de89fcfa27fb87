#include "lmpf/polytope.hpp"

#include <algorithm>
#include <cmath>

#include "lmpf/active_set.hpp"
#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double Polytope::violation(const VectorXd& theta) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows(); ++i) {
    const double nrm = C.row(i).norm();
    const double v = C.row(i).dot(theta) - e(i);
    worst = std::max(worst, nrm > 0.0 ? v / nrm : v);
  }
  return worst;
}

bool Polytope::contains(const VectorXd& theta, double tol) const {
  for (int i = 0; i < rows(); ++i) {
    const double v = C.row(i).dot(theta) - e(i);
    if (v > tol * std::max(1.0, C.row(i).norm())) return false;
  }
  return true;
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
  const int d = static_cast<int>(lo.size());
  Polytope p;
  p.C = MatrixXd::Zero(2 * d, d);
  p.e = VectorXd::Zero(2 * d);
  for (int j = 0; j < d; ++j) {
    p.C(2 * j, j) = 1.0;
    p.e(2 * j) = hi(j);
    p.C(2 * j + 1, j) = -1.0;
    p.e(2 * j + 1) = -lo(j);
  }
  return p;
}

Polytope Polytope::intersect(const Polytope& other) const {
  Polytope out;
  out.C.resize(rows() + other.rows(), dim());
  out.e.resize(rows() + other.rows());
  if (rows() > 0) {
    out.C.topRows(rows()) = C;
    out.e.head(rows()) = e;
  }
  if (other.rows() > 0) {
    out.C.bottomRows(other.rows()) = other.C;
    out.e.tail(other.rows()) = other.e;
  }
  return out;
}

VectorXd lp_minimize(const VectorXd& c, const MatrixXd& A, const VectorXd& b, const std::vector<int>& twin) {
  qp::Problem prob;
  prob.linear = c;
  prob.A = A;
  prob.rhs = b;
  prob.twin = twin;
  return qp::solve(prob).x;
}

std::optional<Ball> chebyshev_center(const Polytope& p, double radius_cap) {
  const int d = p.dim();
  const int m = p.rows();
  MatrixXd a = MatrixXd::Zero(m + 2, d + 1);
  VectorXd b = VectorXd::Zero(m + 2);
  for (int i = 0; i < m; ++i) {
    a.row(i).head(d) = p.C.row(i);
    a(i, d) = p.C.row(i).norm();
    b(i) = p.e(i);
  }
  a(m, d) = 1.0;
  b(m) = radius_cap;
  a(m + 1, d) = -1.0;
  b(m + 1) = 0.0;
  VectorXd c = VectorXd::Zero(d + 1);
  c(d) = -1.0;
  try {
    VectorXd sol = lp_minimize(c, a, b);
    return Ball{sol.head(d), sol(d)};
  } catch (const Infeasible&) {
    return std::nullopt;
  }
}

Polytope normalize_rows(const Polytope& p, bool* infeasible) {
  if (infeasible) *infeasible = false;
  std::vector<int> keep;
  MatrixXd c = p.C;
  VectorXd e = p.e;
  for (int i = 0; i < p.rows(); ++i) {
    const double nrm = c.row(i).norm();
    if (nrm <= 1e-14) {
      if (e(i) < -1e-9 && infeasible) *infeasible = true;
      continue;
    }
    c.row(i) /= nrm;
    e(i) /= nrm;
    bool dup = false;
    for (int& k : keep) {
      if ((c.row(k) - c.row(i)).lpNorm<Eigen::Infinity>() <= 1e-12) {
        if (e(i) < e(k)) k = i;
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  Polytope out;
  out.C.resize(keep.size(), p.dim());
  out.e.resize(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.C.row(k) = c.row(keep[k]);
    out.e(k) = e(keep[k]);
  }
  return out;
}

Reduction reduce_halfspaces(const Polytope& p, double tol) {
  Reduction red;
  const int d = p.dim();

  // Normalize and drop zero / duplicate rows, remembering the source rows.
  std::vector<int> src;
  MatrixXd c(p.rows(), d);
  VectorXd e(p.rows());
  int count = 0;
  for (int i = 0; i < p.rows(); ++i) {
    const double nrm = p.C.row(i).norm();
    if (nrm <= 1e-14) {
      if (p.e(i) < -tol) red.empty = true;
      continue;
    }
    Eigen::RowVectorXd row = p.C.row(i) / nrm;
    const double rhs = p.e(i) / nrm;
    bool dup = false;
    for (int k = 0; k < count; ++k) {
      if ((c.row(k) - row).lpNorm<Eigen::Infinity>() <= 1e-12) {
        if (rhs < e(k)) {
          e(k) = rhs;
          src[k] = i;
        }
        dup = true;
        break;
      }
    }
    if (dup) continue;
    c.row(count) = row;
    e(count) = rhs;
    src.push_back(i);
    ++count;
  }
  c.conservativeResize(count, d);
  e.conservativeResize(count);

  Polytope norm{c, e};
  if (red.empty) {
    red.polytope = norm;
    red.kept = src;
    return red;
  }
  auto ball = chebyshev_center(norm);
  if (!ball) {
    red.empty = true;
    red.polytope = norm;
    red.kept = src;
    return red;
  }
  red.has_interior = ball->radius > tol;

  // Row i is redundant if max C_i theta over the other surviving rows (with
  // row i relaxed by one unit to keep the LP bounded) stays within e_i + tol.
  std::vector<char> alive(count, 1);
  for (int i = 0; i < count; ++i) {
    std::vector<int> idx;
    for (int k = 0; k < count; ++k)
      if (alive[k]) idx.push_back(k);
    MatrixXd a(idx.size(), d);
    VectorXd b(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      a.row(k) = c.row(idx[k]);
      b(k) = e(idx[k]) + (idx[k] == i ? 1.0 : 0.0);
    }
    try {
      VectorXd x = lp_minimize(-c.row(i).transpose(), a, b);
      if (c.row(i).dot(x) <= e(i) + tol) alive[i] = 0;
    } catch (const Unbounded&) {
      // Bounded by construction; keep the row if the LP misbehaves.
    } catch (const Infeasible&) {
    }
  }
  std::vector<int> final_rows;
  for (int i = 0; i < count; ++i)
    if (alive[i]) final_rows.push_back(i);
  red.polytope.C.resize(final_rows.size(), d);
  red.polytope.e.resize(final_rows.size());
  for (std::size_t k = 0; k < final_rows.size(); ++k) {
    red.polytope.C.row(k) = c.row(final_rows[k]);
    red.polytope.e(k) = e(final_rows[k]);
    red.kept.push_back(src[final_rows[k]]);
  }
  return red;
}

std::optional<Ball> facet_center(const Polytope& p, int row, double radius_cap) {
  const int d = p.dim();
  const int m = p.rows();
  Eigen::RowVectorXd nf = p.C.row(row);
  const double nn = nf.norm();
  nf /= nn;
  const double ef = p.e(row) / nn;

  MatrixXd a = MatrixXd::Zero(m + 3, d + 1);
  VectorXd b = VectorXd::Zero(m + 3);
  std::vector<int> twin(m + 3, -1);
  int r = 0;
  for (int i = 0; i < m; ++i) {
    if (i == row) continue;
    Eigen::RowVectorXd ci = p.C.row(i);
    Eigen::RowVectorXd proj = ci - ci.dot(nf) * nf;
    a.row(r).head(d) = ci;
    a(r, d) = proj.norm();
    b(r) = p.e(i);
    ++r;
  }
  a.row(r).head(d) = nf;
  b(r) = ef;
  a.row(r + 1).head(d) = -nf;
  b(r + 1) = -ef;
  twin[r] = r + 1;
  twin[r + 1] = r;
  a(r + 2, d) = 1.0;
  b(r + 2) = radius_cap;
  a(r + 3, d) = -1.0;
  b(r + 3) = 0.0;
  // r + 4 == m + 3 rows in total.
  VectorXd c = VectorXd::Zero(d + 1);
  c(d) = -1.0;
  try {
    VectorXd sol = lp_minimize(c, a, b, twin);
    return Ball{sol.head(d), sol(d)};
  } catch (const Infeasible&) {
    return std::nullopt;
  }
}

std::optional<std::vector<VectorXd>> enumerate_vertices(const Polytope& p, long long max_combinations, double tol) {
  const int d = p.dim();
  const int m = p.rows();
  std::vector<VectorXd> verts;
  if (m < d) return verts;

  // Binomial(m, d) with overflow guard.
  long double combos = 1.0L;
  for (int k = 1; k <= d; ++k) combos = combos * (m - d + k) / k;
  if (combos > static_cast<long double>(max_combinations)) return std::nullopt;

  std::vector<int> idx(d);
  for (int k = 0; k < d; ++k) idx[k] = k;
  MatrixXd a(d, d);
  VectorXd b(d);
  while (true) {
    for (int k = 0; k < d; ++k) {
      a.row(k) = p.C.row(idx[k]);
      b(k) = p.e(idx[k]);
    }
    Eigen::FullPivLU<MatrixXd> lu(a);
    if (lu.isInvertible()) {
      VectorXd v = lu.solve(b);
      if (p.contains(v, tol * std::max(1.0, v.lpNorm<Eigen::Infinity>()))) {
        bool dup = false;
        for (const auto& w : verts)
          if ((w - v).lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, v.lpNorm<Eigen::Infinity>())) {
            dup = true;
            break;
          }
        if (!dup) verts.push_back(v);
      }
    }
    int k = d - 1;
    while (k >= 0 && idx[k] == m - d + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return verts;
}

Anchor region_anchor(const Polytope& p, int dim_budget) {
  auto ball = chebyshev_center(p);
  if (!ball || ball->radius < 0.0) throw EmptyRegion("cannot anchor an empty polytope");
  if (p.dim() <= dim_budget) {
    auto verts = enumerate_vertices(p);
    if (verts && !verts->empty()) {
      VectorXd mean = VectorXd::Zero(p.dim());
      for (const auto& v : *verts) mean += v;
      return {mean / static_cast<double>(verts->size()), false};
    }
  }
  return {ball->center, true};
}

}  // namespace lmpf
