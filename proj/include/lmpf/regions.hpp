#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <vector>

#include <Eigen/Dense>

#include "lmpf/mpp.hpp"
#include "lmpf/opf.hpp"
#include "lmpf/polytope.hpp"

namespace lmpf {

enum class PriceMapKind { Constant, Affine };
enum class Provenance { Offline, Dcrg };

/// Parameter set sharing one optimal active set. The polytope is the closure
/// of the region intersected with the parameter box.
struct CriticalRegion {
  int id = -1;
  int configuration = 0;
  Polytope polytope;
  ActiveSet active;
  AffineSolution affine;  // empty after deserialization until rebuilt
  PriceMapKind price_kind = PriceMapKind::Constant;
  Eigen::VectorXd price;         // constant LMP vector
  Eigen::MatrixXd price_gain;    // U, affine maps only
  Eigen::VectorXd price_offset;  // v
  CongestionPattern congestion;
  Ball interior;  // largest inscribed ball

  /// LMP from the stored price map.
  Eigen::VectorXd lmp_at(const Eigen::VectorXd& theta) const;
  bool has_affine() const { return affine.primal_offset.size() > 0; }
};

struct RegionOptions {
  /// Remove redundant halfspaces with certified LPs. DCRG skips this.
  bool reduce = true;
  double empty_tol = 1e-9;  // Chebyshev radius, relative to the box diagonal
};

/// Region of a linear-cost program from its active set: inactive rows stay
/// slack under the basis solution. Throws Degenerate for a singular basis and
/// EmptyRegion for a dual-infeasible basis or an empty polytope.
CriticalRegion region_from_active_set_linear(const MppProblem& p, const ActiveSet& active,
                                             const RegionOptions& options = {});
/// Quadratic-cost region: primal feasibility of the affine optimizer and
/// non-negativity of the affine multipliers.
CriticalRegion region_from_active_set_quadratic(const MppProblem& p, const ActiveSet& active,
                                                const RegionOptions& options = {});
CriticalRegion region_from_active_set(const MppProblem& p, const ActiveSet& active,
                                      const RegionOptions& options = {});

struct EnumerationStats {
  long long opf_solves = 0;
  long long jitter_retries = 0;
  long long infeasible_probes = 0;
  long long gap_fill_points = 0;
  long long gap_fill_regions = 0;
};

/// Regions with point location. Lookups may run concurrently with each other
/// and with insertions; insertions are serialized and keyed by active set.
class RegionStore {
 public:
  RegionStore() = default;
  RegionStore(int parameter_count, CostKind cost_kind, Provenance provenance, int configuration = 0);
  RegionStore(const RegionStore& other);
  RegionStore& operator=(const RegionStore& other);
  RegionStore(RegionStore&&) noexcept = default;
  RegionStore& operator=(RegionStore&&) noexcept = default;

  int size() const;
  bool empty() const { return size() == 0; }
  int parameter_count() const { return parameter_count_; }
  CostKind cost_kind() const { return cost_kind_; }
  Provenance provenance() const { return provenance_; }
  int configuration() const { return configuration_; }

  /// Reference stays valid while the store lives.
  const CriticalRegion& region(int id) const;
  std::vector<const CriticalRegion*> all() const;

  /// Lowest id whose closed polytope contains theta.
  std::optional<int> locate(const Eigen::VectorXd& theta, double tol = 1e-9) const;
  std::optional<int> find(const ActiveSet& active) const;
  /// Inserts unless a region with the same active set exists. Returns the id
  /// and whether a new region was added.
  std::pair<int, bool> insert(CriticalRegion region);

  /// Rebuilds every region's affine solution from its active set.
  void attach(const MppProblem& p);

  EnumerationStats stats;

 private:
  int parameter_count_ = 0;
  CostKind cost_kind_ = CostKind::Linear;
  Provenance provenance_ = Provenance::Offline;
  int configuration_ = 0;
  std::deque<CriticalRegion> regions_;
  std::map<std::vector<int>, int> by_active_;
  std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

std::optional<int> locate(const RegionStore& store, const Eigen::VectorXd& theta, double tol = 1e-9);

struct EnumerateOptions {
  int max_regions = 10'000;
  double step = 1e-6;  // facet-crossing step, relative to the box diagonal
  /// Points of the low-discrepancy sweep that looks for regions the facet
  /// walk missed. Negative selects 2000 * dimension (at most 50,000).
  long long gap_fill_points = -1;
  std::uint64_t seed = 1;
  int configuration = 0;
  SolveOptions solve;
};

/// Breadth-first facet-crossing exploration of the parameter box, followed by
/// a coverage sweep. Throws Infeasible when no point of the box is feasible
/// and BudgetExceeded when the region cap is hit.
RegionStore enumerate_regions(const MppProblem& p, const EnumerateOptions& options = {});

/// Point of the unit cube from the Halton sequence (index >= 1).
Eigen::VectorXd halton_point(long long index, int dim);

}  // namespace lmpf
