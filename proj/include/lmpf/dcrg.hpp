#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lmpf/forecast.hpp"
#include "lmpf/mpp.hpp"
#include "lmpf/opf.hpp"
#include "lmpf/regions.hpp"
#include "lmpf/stochastic.hpp"

namespace lmpf {

struct DcrgCounters {
  long long samples = 0;
  long long opf_solves = 0;  // every solve, including infeasible and degenerate samples
  long long cache_hits = 0;
  long long regions = 0;     // regions added by this cache
  long long infeasible = 0;
  long long degenerate = 0;  // solved, but no full-dimensional region could be built
};

/// Regions grown on demand from samples. hits + solves = samples; in
/// single-worker runs solves = regions + infeasible + degenerate.
struct DcrgCache {
  RegionStore store;
  DcrgCounters counters;
};

DcrgCache make_dcrg_cache(const MppProblem& p, int configuration = 0);

/// Per-sample output. Rows of `lmp` are samples (NaN rows for infeasible ones).
struct SampleStream {
  Eigen::MatrixXd lmp;
  std::vector<CongestionPattern> congestion;
  std::vector<int> region;  // region id, -1 when the sample has none
  std::vector<char> feasible;

  long long size() const { return static_cast<long long>(feasible.size()); }
};

struct DcrgOptions {
  int workers = 1;  // 1 = strictly sequential and deterministic in every counter
  SolveOptions solve;
  double locate_tol = 1e-9;
};

/// Dynamic critical region generation over the rows of `thetas`. A sample
/// inside a cached region is priced by the region's closed-form map; a miss
/// solves the dispatch once, builds the region of its active set and caches
/// it. Prices are bit-identical to solving every sample directly.
SampleStream dcrg_simulate(const MppProblem& p, const Eigen::MatrixXd& thetas, DcrgCache& cache,
                           const DcrgOptions& options = {});
/// Draws `count` samples from the law (clamped to the parameter box) first.
SampleStream dcrg_simulate(const MppProblem& p, const ConditionalLaw& law, long long count, std::uint64_t seed,
                           DcrgCache& cache, const DcrgOptions& options = {});

/// Reference: one dispatch solve per sample.
SampleStream direct_simulate(const MppProblem& p, const Eigen::MatrixXd& thetas, int workers = 1,
                             const SolveOptions& solve = {});

/// Region probabilities as sample frequencies of a DCRG run. Draws falling
/// outside the parameter box or at infeasible parameters are not priced and
/// count toward the unexplored mass.
ForecastDistribution forecast_dcrg(const MppProblem& p, const ConditionalLaw& law, long long count,
                                   std::uint64_t seed, DcrgCache& cache, const DcrgOptions& options = {});

/// Number of samples per region id (index = id), ignoring samples without a region.
std::vector<long long> region_visits(const SampleStream& stream, int region_count);

}  // namespace lmpf
