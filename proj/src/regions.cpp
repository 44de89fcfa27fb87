#include "lmpf/regions.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>
#include <random>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::VectorXd CriticalRegion::lmp_at(const VectorXd& theta) const {
  if (price_kind == PriceMapKind::Constant) return price;
  return price_gain * theta + price_offset;
}

namespace {

CongestionPattern pattern_from_active(const MppProblem& p, const ActiveSet& active) {
  CongestionPattern out(p.line_count(), 0);
  if (static_cast<int>(p.rows.size()) != p.row_count()) return out;
  for (int i : active.rows) {
    const RowInfo& info = p.rows[i];
    if (info.kind == RowKind::LineUpper) out[info.element] = 1;
    if (info.kind == RowKind::LineLower) out[info.element] = out[info.element] == 1 ? 0 : -1;
  }
  return out;
}

CriticalRegion build_region(const MppProblem& p, const ActiveSet& active, const RegionOptions& options) {
  const AffineSolution aff = affine_solution(p, active);
  const int m = p.row_count();
  const int np = p.parameter_count();

  std::vector<char> in_basis(m, 0), paired(m, 0);
  for (int i : active.rows) in_basis[i] = 1;
  for (int i : aff.equality_rows) {
    paired[i] = 1;
    paired[p.twin[i]] = 1;
  }

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int j = 0; j < m; ++j) {
    if (in_basis[j]) continue;
    Eigen::RowVectorXd row = p.A.row(j) * aff.primal_gain - p.E.row(j);
    // Rows that cancel to rounding noise are constant on the region.
    const double scale = (p.A.row(j).cwiseAbs() * aff.primal_gain.cwiseAbs()).sum() + p.E.row(j).cwiseAbs().sum();
    if (row.lpNorm<Eigen::Infinity>() <= 1e-11 * std::max(1.0, scale)) row.setZero();
    rows.push_back(row);
    rhs.push_back(p.b(j) - p.A.row(j).dot(aff.primal_offset));
  }
  const double cscale = std::max(1.0, p.linear_cost.lpNorm<Eigen::Infinity>());
  const double dual_scale = std::max(1.0, aff.dual_gain.size() ? aff.dual_gain.lpNorm<Eigen::Infinity>() : 0.0);
  for (int i : active.rows) {
    if (paired[i]) continue;
    if (!p.is_quadratic()) {
      if (aff.dual_offset(i) < -1e-9 * cscale)
        throw EmptyRegion("active set is not dual feasible (row " + std::to_string(i) + ")");
    } else {
      Eigen::RowVectorXd row = -aff.dual_gain.row(i);
      if (row.lpNorm<Eigen::Infinity>() <= 1e-11 * dual_scale) row.setZero();
      rows.push_back(row);
      rhs.push_back(aff.dual_offset(i));
    }
  }

  Polytope raw;
  raw.C.resize(rows.size(), np);
  raw.e.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    raw.C.row(k) = rows[k];
    raw.e(k) = rhs[k];
  }
  raw = raw.intersect(p.box());
  bool infeasible = false;
  Polytope poly = normalize_rows(raw, &infeasible);
  if (infeasible) throw EmptyRegion("region has a violated constant constraint");
  auto ball = chebyshev_center(poly);
  const double tol = options.empty_tol * std::max(1.0, p.box_diagonal());
  if (!ball || ball->radius <= tol) throw EmptyRegion("region has an empty interior");
  if (options.reduce) {
    Reduction red = reduce_halfspaces(poly);
    if (red.empty) throw EmptyRegion("region is empty");
    poly = red.polytope;
  }

  CriticalRegion r;
  r.polytope = std::move(poly);
  r.active = active;
  r.affine = aff;
  r.interior = *ball;
  const DispatchSolution at_center = evaluate_affine(p, aff, ball->center);
  r.price = at_center.lmp;
  if (p.is_quadratic()) {
    r.price_kind = PriceMapKind::Affine;
    r.price_gain = aff.price_gain;
    r.price_offset = aff.price_offset;
  } else {
    r.price_kind = PriceMapKind::Constant;
  }
  r.congestion = pattern_from_active(p, active);
  return r;
}

}  // namespace

CriticalRegion region_from_active_set_linear(const MppProblem& p, const ActiveSet& active,
                                             const RegionOptions& options) {
  if (p.is_quadratic()) throw InvalidInput("program has a quadratic cost");
  return build_region(p, active, options);
}

CriticalRegion region_from_active_set_quadratic(const MppProblem& p, const ActiveSet& active,
                                                const RegionOptions& options) {
  if (!p.is_quadratic()) throw InvalidInput("program has a linear cost");
  return build_region(p, active, options);
}

CriticalRegion region_from_active_set(const MppProblem& p, const ActiveSet& active, const RegionOptions& options) {
  return build_region(p, active, options);
}

RegionStore::RegionStore(int parameter_count, CostKind cost_kind, Provenance provenance, int configuration)
    : parameter_count_(parameter_count), cost_kind_(cost_kind), provenance_(provenance), configuration_(configuration) {}

RegionStore::RegionStore(const RegionStore& other) {
  std::shared_lock lock(*other.mutex_);
  stats = other.stats;
  parameter_count_ = other.parameter_count_;
  cost_kind_ = other.cost_kind_;
  provenance_ = other.provenance_;
  configuration_ = other.configuration_;
  regions_ = other.regions_;
  by_active_ = other.by_active_;
}

RegionStore& RegionStore::operator=(const RegionStore& other) {
  if (this == &other) return *this;
  RegionStore copy(other);
  *this = std::move(copy);
  return *this;
}

int RegionStore::size() const {
  std::shared_lock lock(*mutex_);
  return static_cast<int>(regions_.size());
}

const CriticalRegion& RegionStore::region(int id) const {
  std::shared_lock lock(*mutex_);
  if (id < 0 || id >= static_cast<int>(regions_.size())) throw InvalidInput("region id out of range");
  return regions_[id];
}

std::vector<const CriticalRegion*> RegionStore::all() const {
  std::shared_lock lock(*mutex_);
  std::vector<const CriticalRegion*> out;
  for (const auto& r : regions_) out.push_back(&r);
  return out;
}

std::optional<int> RegionStore::locate(const VectorXd& theta, double tol) const {
  std::shared_lock lock(*mutex_);
  for (const auto& r : regions_)
    if (r.polytope.contains(theta, tol)) return r.id;
  return std::nullopt;
}

std::optional<int> RegionStore::find(const ActiveSet& active) const {
  std::shared_lock lock(*mutex_);
  auto it = by_active_.find(active.rows);
  if (it == by_active_.end()) return std::nullopt;
  return it->second;
}

std::pair<int, bool> RegionStore::insert(CriticalRegion region) {
  std::unique_lock lock(*mutex_);
  auto it = by_active_.find(region.active.rows);
  if (it != by_active_.end()) return {it->second, false};
  region.id = static_cast<int>(regions_.size());
  region.configuration = configuration_;
  by_active_.emplace(region.active.rows, region.id);
  regions_.push_back(std::move(region));
  return {regions_.back().id, true};
}

void RegionStore::attach(const MppProblem& p) {
  std::unique_lock lock(*mutex_);
  if (p.parameter_count() != parameter_count_) throw InvalidInput("store and program have different dimensions");
  for (auto& r : regions_) r.affine = affine_solution(p, r.active);
}

std::optional<int> locate(const RegionStore& store, const VectorXd& theta, double tol) {
  return store.locate(theta, tol);
}

VectorXd halton_point(long long index, int dim) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                               59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  if (dim > 32) throw InvalidInput("Halton sequence supports at most 32 dimensions");
  VectorXd x(dim);
  for (int j = 0; j < dim; ++j) {
    const int base = primes[j];
    double f = 1.0, r = 0.0;
    long long i = index;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    x(j) = r;
  }
  return x;
}

RegionStore enumerate_regions(const MppProblem& p, const EnumerateOptions& options) {
  const int np = p.parameter_count();
  if (np == 0) throw InvalidInput("program has no parameters");
  for (int j = 0; j < np; ++j)
    if (!(p.box_hi(j) > p.box_lo(j))) throw InvalidInput("enumeration needs a full-dimensional parameter box");

  RegionStore store(np, p.cost_kind, Provenance::Offline, options.configuration);
  const double diag = p.box_diagonal();
  const Polytope box = p.box();
  std::mt19937_64 rng(options.seed);

  auto clamp = [&](VectorXd x) { return x.cwiseMax(p.box_lo).cwiseMin(p.box_hi); };

  auto region_at = [&](VectorXd theta) -> std::optional<int> {
    for (int attempt = 0; attempt < 12; ++attempt) {
      DispatchSolution sol;
      try {
        sol = solve_dcopf(p, theta, options.solve);
        ++store.stats.opf_solves;
      } catch (const Infeasible&) {
        ++store.stats.infeasible_probes;
        return std::nullopt;
      }
      if (auto id = store.find(sol.active)) return id;
      try {
        if (store.size() >= options.max_regions)
          throw BudgetExceeded("region cap of " + std::to_string(options.max_regions) + " reached");
        return store.insert(region_from_active_set(p, sol.active)).first;
      } catch (const Degenerate&) {
      } catch (const EmptyRegion&) {
      }
      // theta sits on a lower-dimensional piece; move it off.
      ++store.stats.jitter_retries;
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const double radius = options.step * diag * std::pow(4.0, attempt);
      VectorXd delta(np);
      for (int j = 0; j < np; ++j) delta(j) = u(rng);
      theta = clamp(theta + radius * delta);
    }
    return std::nullopt;
  };

  std::queue<int> frontier;
  std::vector<char> queued;
  auto push = [&](int id) {
    if (static_cast<int>(queued.size()) <= id) queued.resize(id + 1, 0);
    if (queued[id]) return;
    queued[id] = 1;
    frontier.push(id);
  };

  auto explore = [&]() {
    while (!frontier.empty()) {
      const int rid = frontier.front();
      frontier.pop();
      const Polytope poly = store.region(rid).polytope;
      for (int f = 0; f < poly.rows(); ++f) {
        auto fc = facet_center(poly, f);
        if (!fc) continue;
        const VectorXd normal = poly.C.row(f).transpose().normalized();
        for (double eps : {options.step * diag, 10.0 * options.step * diag}) {
          const VectorXd x = fc->center + eps * normal;
          if (box.violation(x) > 0.0) break;
          auto hit = store.locate(x, 0.0);
          if (hit && *hit != rid) break;
          if (hit) continue;
          auto id = region_at(x);
          if (!id) break;
          if (*id == rid) continue;
          push(*id);
          break;
        }
      }
    }
  };

  std::optional<int> first = region_at(p.box_center());
  long long probe = 1;
  while (!first && probe <= 10'000) {
    const VectorXd u = halton_point(probe++, np);
    first = region_at(p.box_lo + (p.box_hi - p.box_lo).cwiseProduct(u));
  }
  if (!first) throw Infeasible("dispatch is infeasible everywhere in the parameter box");
  push(*first);
  explore();

  const long long sweep =
      options.gap_fill_points >= 0 ? options.gap_fill_points : std::min<long long>(50'000, 2000LL * np);
  VectorXd shift(np);
  for (int j = 0; j < np; ++j) shift(j) = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (long long i = 1; i <= sweep; ++i) {
    VectorXd u = halton_point(i, np) + shift;
    for (int j = 0; j < np; ++j) u(j) -= std::floor(u(j));
    const VectorXd x = p.box_lo + (p.box_hi - p.box_lo).cwiseProduct(u);
    if (store.locate(x)) continue;
    const int before = store.size();
    auto id = region_at(x);
    if (id && store.size() > before) {
      ++store.stats.gap_fill_regions;
      push(*id);
      explore();
    }
  }
  store.stats.gap_fill_points = sweep;
  return store;
}

}  // namespace lmpf
