#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmpf/network.hpp"
#include "lmpf/regions.hpp"
#include "lmpf/stochastic.hpp"

namespace lmpf {

struct ForecastEntry {
  int configuration = 0;
  int region = -1;
  double probability = 0.0;
  double standard_error = 0.0;
  Eigen::VectorXd lmp;  // constant price, or the price at the region's center for affine maps
  CongestionPattern congestion;

  // Gaussian component of the price law (affine price maps only).
  Eigen::MatrixXd price_gain;
  Eigen::VectorXd price_offset;
  Eigen::VectorXd component_mean;
  Eigen::MatrixXd component_covariance;
  Eigen::VectorXd codomain_lo;  // per-bus price range over the region
  Eigen::VectorXd codomain_hi;
};

struct ForecastDistribution {
  std::vector<ForecastEntry> entries;
  /// 1 - sum of probabilities: mass outside every known region (unexplored
  /// parameter space, infeasible parameters, or estimation slack).
  double unexplored_mass = 0.0;
  bool plain_monte_carlo = false;
  bool rescaled = false;  // estimates summed above one and were normalized
  std::vector<std::string> warnings;

  int issue_time = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  long long samples = 0;
  std::string method;

  double total() const;
  /// Index of the entry for (configuration, region), if any.
  std::optional<std::size_t> find(int configuration, int region) const;
};

/// Importance-sampling proposal for one region. Defensive: equal mixture of
/// the region-anchored Gaussian and the law itself. AnchorOnly: the Gaussian
/// centered at the region anchor with the law's covariance.
enum class ProposalKind { Defensive, AnchorOnly };

struct ForecastOptions {
  long long samples = 10'000;  // per region for importance sampling, in total for plain Monte Carlo
  std::uint64_t seed = 1;
  ProposalKind proposal = ProposalKind::Defensive;
  int anchor_dim_budget = 6;
  /// Shifted Sobol points instead of pseudo-random draws for importance
  /// sampling; the standard error then comes from `replicates` independent
  /// shifts, each of a power-of-two block (so the sample count rounds up).
  bool quasi_random = true;
  int replicates = 16;
  int workers = 1;
  int issue_time = 0;
};

/// Region anchors (vertex mean in low dimension, Chebyshev center otherwise).
std::vector<Anchor> region_anchors(const RegionStore& store, int dim_budget = 6);

/// Probability of theta_{t+T} falling in each region. Falls back to plain
/// Monte Carlo (with a warning) when the law's covariance is singular.
ForecastDistribution forecast_regions(const RegionStore& store, const ConditionalLaw& law,
                                      const ForecastOptions& options = {});
ForecastDistribution forecast_regions(const RegionStore& store, const ConditionalLaw& law,
                                      const std::vector<Anchor>& anchors, const ForecastOptions& options);

/// Plain Monte Carlo: draw from the law and count region hits.
ForecastDistribution forecast_plain_mc(const RegionStore& store, const ConditionalLaw& law,
                                       const ForecastOptions& options = {});

/// Mixture over configurations. With `observed` set, the forecast for that
/// configuration alone; otherwise sum_k p_k f^(k). `stores[k]` serves
/// configuration k and may be null when p_k = 0.
ForecastDistribution forecast_with_contingencies(const std::vector<const RegionStore*>& stores,
                                                 const ContingencyModel& model, const ConditionalLaw& law,
                                                 std::optional<int> observed, const ForecastOptions& options = {});
/// Same mixture from forecasts already computed per configuration.
ForecastDistribution mix_forecasts(const std::vector<ForecastDistribution>& per_config,
                                   const std::vector<double>& probabilities, std::optional<int> observed);

/// Price law for quadratic cost: per region weight, Gaussian component
/// N(U mean + v, U Sigma U') and per-bus codomain ranges.
ForecastDistribution forecast_lmp_density_quadratic(const RegionStore& store, const ConditionalLaw& law,
                                                    const ForecastOptions& options = {});

/// Marginal CDF of the price at `bus` under the quadratic-cost price law:
/// each region contributes its Gaussian component restricted to the region's
/// price range (exact for one-dimensional parameters); zero-variance
/// components contribute an atom carrying the region weight.
double mixture_marginal_cdf(const ForecastDistribution& dist, int bus, double x);
double mixture_marginal_density(const ForecastDistribution& dist, int bus, double x);

/// Draws theta from the law restricted to one region (rejection sampling) and
/// maps it through the region's price map.
Eigen::MatrixXd sample_region_prices(const CriticalRegion& region, const ConditionalLaw& law, long long count,
                                     std::uint64_t seed, long long max_attempts = 10'000'000);

}  // namespace lmpf
