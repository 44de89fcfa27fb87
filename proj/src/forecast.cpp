#include "lmpf/forecast.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr long long kChunk = 4096;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_law(const RegionStore& store, const ConditionalLaw& law) {
  if (store.empty()) throw InvalidInput("region store is empty");
  if (law.dimension() != store.parameter_count())
    throw InvalidInput("law dimension " + std::to_string(law.dimension()) + " does not match the store's " +
                       std::to_string(store.parameter_count()));
}

ForecastEntry entry_for(const CriticalRegion& r) {
  ForecastEntry e;
  e.configuration = r.configuration;
  e.region = r.id;
  e.lmp = r.price;
  e.congestion = r.congestion;
  return e;
}

void finish(ForecastDistribution& d) {
  double total = 0.0;
  for (auto& e : d.entries) {
    e.probability = std::clamp(e.probability, 0.0, 1.0);
    total += e.probability;
  }
  if (total > 1.0) {
    for (auto& e : d.entries) {
      e.probability /= total;
      e.standard_error /= total;
    }
    d.rescaled = true;
    total = 1.0;
  }
  d.unexplored_mass = std::max(0.0, 1.0 - total);
}

bool is_singular(const MatrixXd& cov) {
  if (cov.rows() == 0) return true;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return true;
  const MatrixXd l = llt.matrixL();
  const double scale = std::max(1e-300, cov.diagonal().maxCoeff());
  return l.diagonal().minCoeff() <= 1e-7 * std::sqrt(scale);
}

struct IsEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Running sums of the weighted indicator y = w 1{theta in region} and the weight w.
struct WeightSums {
  double sy = 0.0, syy = 0.0, sw = 0.0, sww = 0.0, swy = 0.0;
  long long n = 0;

  void add(double w, bool inside) {
    const double y = inside ? w : 0.0;
    sy += y;
    syy += y * y;
    sw += w;
    sww += w * w;
    swy += w * y;
    ++n;
  }

  // With `control`, the regression estimator on the weight (whose proposal
  // mean is exactly one). Returns the estimate and its per-sample variance.
  std::pair<double, double> estimate(bool control) const {
    const double nn = static_cast<double>(n);
    const double my = sy / nn, mw = sw / nn;
    const double vyy = std::max(0.0, syy / nn - my * my);
    const double vww = std::max(0.0, sww / nn - mw * mw);
    const double cwy = swy / nn - mw * my;
    double beta = 0.0;
    if (control && vww > 1e-12 * std::max(1.0, sww / nn)) beta = cwy / vww;
    return {my - beta * (mw - 1.0), std::max(0.0, vyy - 2.0 * beta * cwy + beta * beta * vww)};
  }
};

class RegionSampler {
 public:
  RegionSampler(const CriticalRegion& region, const VectorXd& mu, const MatrixXd& l, const VectorXd& anchor,
                ProposalKind kind)
      : region_(region), mu_(mu), l_(l), anchor_(anchor), kind_(kind) {
    delta_ = l.triangularView<Eigen::Lower>().solve(anchor - mu);
  }

  // One proposal draw from a mixture selector u in [0,1) and standard normal z.
  void draw(double u, const VectorXd& z, WeightSums& acc) const {
    const bool from_anchor = kind_ == ProposalKind::AnchorOnly || u < 0.5;
    VectorXd s;
    double qa, qm;
    if (from_anchor) {
      s = anchor_ + l_ * z;
      qa = z.squaredNorm();
      qm = (z + delta_).squaredNorm();
    } else {
      s = mu_ + l_ * z;
      qm = z.squaredNorm();
      qa = (z - delta_).squaredNorm();
    }
    const double w = kind_ == ProposalKind::AnchorOnly ? std::exp(0.5 * (qa - qm))
                                                       : 1.0 / (0.5 * std::exp(0.5 * (qm - qa)) + 0.5);
    acc.add(w, region_.polytope.contains(s, 0.0));
  }

  bool control() const { return kind_ == ProposalKind::Defensive; }

 private:
  const CriticalRegion& region_;
  const VectorXd& mu_;
  const MatrixXd& l_;
  const VectorXd& anchor_;
  ProposalKind kind_;
  VectorXd delta_;
};

IsEstimate pseudo_random_estimate(const RegionSampler& sampler, int d, long long n, std::uint64_t seed) {
  Rng rng(seed);
  WeightSums acc;
  VectorXd z(d);
  for (long long j = 0; j < n; ++j) {
    const double u = sampler.control() ? rng.uniform() : 0.0;
    for (int k = 0; k < d; ++k) z(k) = rng.gaussian();
    sampler.draw(u, z, acc);
  }
  const auto [mean, var] = acc.estimate(sampler.control());
  return {mean, n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0};
}

// Points per replicate: a power of two, so every block is a balanced Sobol set.
long long quasi_block(long long n, int replicates) {
  long long m = 1;
  while (m * replicates < n) m *= 2;
  return m;
}

// Randomized quasi-Monte Carlo: independent random shifts of one Sobol point
// set; the spread of the replicate estimates gives the standard error.
IsEstimate quasi_random_estimate(const RegionSampler& sampler, int d, long long n, int replicates,
                                 std::uint64_t seed) {
  const long long m = quasi_block(n, replicates);
  const int dim = d + 1;
  std::vector<double> points(static_cast<std::size_t>(m) * dim);
  {
    boost::random::sobol engine(dim);
    engine.discard(dim);  // skip the origin
    const double scale = static_cast<double>(engine.max()) + 1.0;
    for (auto& v : points) v = static_cast<double>(engine()) / scale;
  }
  Rng rng(seed);
  std::vector<double> means(replicates);
  VectorXd shift(dim), z(d);
  for (int r = 0; r < replicates; ++r) {
    for (int k = 0; k < dim; ++k) shift(k) = rng.uniform();
    WeightSums acc;
    for (long long j = 0; j < m; ++j) {
      const double* p = &points[static_cast<std::size_t>(j) * dim];
      double u0 = 0.0;
      for (int k = 0; k < dim; ++k) {
        double v = p[k] + shift(k);
        if (v >= 1.0) v -= 1.0;
        v = std::clamp(v, 1e-16, 1.0 - 1e-16);
        if (k == 0)
          u0 = v;
        else
          z(k - 1) = boost::math::quantile(boost::math::normal(), v);
      }
      sampler.draw(u0, z, acc);
    }
    means[r] = acc.estimate(sampler.control()).first;
  }
  IsEstimate est;
  for (double v : means) est.mean += v;
  est.mean /= replicates;
  double ss = 0.0;
  for (double v : means) ss += (v - est.mean) * (v - est.mean);
  est.se = replicates > 1 ? std::sqrt(ss / (replicates - 1) / replicates) : 0.0;
  return est;
}

}  // namespace

double ForecastDistribution::total() const {
  double t = 0.0;
  for (const auto& e : entries) t += e.probability;
  return t;
}

std::optional<std::size_t> ForecastDistribution::find(int configuration, int region) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].configuration == configuration && entries[i].region == region) return i;
  return std::nullopt;
}

std::vector<Anchor> region_anchors(const RegionStore& store, int dim_budget) {
  std::vector<Anchor> out;
  for (const auto* r : store.all()) out.push_back(region_anchor(r->polytope, dim_budget));
  return out;
}

ForecastDistribution forecast_plain_mc(const RegionStore& store, const ConditionalLaw& law,
                                       const ForecastOptions& options) {
  check_law(store, law);
  if (options.samples < 1) throw InvalidInput("sample count must be at least 1");
  GaussianSampler sampler(law.covariance);
  const int nr = store.size();
  const long long chunks = (options.samples + kChunk - 1) / kChunk;
  std::vector<std::vector<long long>> counts(chunks, std::vector<long long>(nr, 0));

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.workers))
  for (long long c = 0; c < chunks; ++c) {
    Rng rng(split_seed(options.seed, static_cast<std::uint64_t>(c)));
    const long long n = std::min(kChunk, options.samples - c * kChunk);
    for (long long j = 0; j < n; ++j) {
      const VectorXd s = law.mean + sampler.draw(rng);
      if (auto id = store.locate(s)) ++counts[c][*id];
    }
  }

  ForecastDistribution d;
  d.plain_monte_carlo = true;
  d.method = "plain-mc";
  d.horizon = law.horizon;
  d.seed = options.seed;
  d.samples = options.samples;
  d.issue_time = options.issue_time;
  const double n = static_cast<double>(options.samples);
  for (int i = 0; i < nr; ++i) {
    long long k = 0;
    for (long long c = 0; c < chunks; ++c) k += counts[c][i];
    ForecastEntry e = entry_for(store.region(i));
    e.probability = static_cast<double>(k) / n;
    e.standard_error = std::sqrt(e.probability * (1.0 - e.probability) / n);
    d.entries.push_back(std::move(e));
  }
  finish(d);
  return d;
}

ForecastDistribution forecast_regions(const RegionStore& store, const ConditionalLaw& law,
                                      const ForecastOptions& options) {
  check_law(store, law);
  if (is_singular(law.covariance)) return forecast_regions(store, law, {}, options);
  return forecast_regions(store, law, region_anchors(store, options.anchor_dim_budget), options);
}

ForecastDistribution forecast_regions(const RegionStore& store, const ConditionalLaw& law,
                                      const std::vector<Anchor>& anchors, const ForecastOptions& options) {
  check_law(store, law);
  if (options.samples < 1) throw InvalidInput("sample count must be at least 1");
  if (options.quasi_random && options.replicates < 2) throw InvalidInput("need at least two replicates");
  if (is_singular(law.covariance)) {
    ForecastDistribution d = forecast_plain_mc(store, law, options);
    d.warnings.push_back("covariance is singular; used plain Monte Carlo");
    return d;
  }
  const int nr = store.size();
  if (static_cast<int>(anchors.size()) != nr) throw InvalidInput("one anchor per region is required");
  const MatrixXd l = Eigen::LLT<MatrixXd>(law.covariance).matrixL();
  std::vector<IsEstimate> est(nr);
  const auto regions = store.all();

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.workers))
  for (int i = 0; i < nr; ++i) {
    const RegionSampler sampler(*regions[i], law.mean, l, anchors[i].point, options.proposal);
    const std::uint64_t seed = split_seed(options.seed, static_cast<std::uint64_t>(i));
    est[i] = options.quasi_random
                 ? quasi_random_estimate(sampler, law.dimension(), options.samples, options.replicates, seed)
                 : pseudo_random_estimate(sampler, law.dimension(), options.samples, seed);
  }

  ForecastDistribution d;
  d.method = options.proposal == ProposalKind::Defensive ? "importance-sampling" : "importance-sampling-anchor";
  d.horizon = law.horizon;
  d.seed = options.seed;
  d.samples = options.quasi_random ? quasi_block(options.samples, options.replicates) * options.replicates : options.samples;
  d.issue_time = options.issue_time;
  for (int i = 0; i < nr; ++i) {
    ForecastEntry e = entry_for(*regions[i]);
    e.probability = est[i].mean;
    e.standard_error = est[i].se;
    d.entries.push_back(std::move(e));
  }
  bool fallback = false;
  for (const auto& a : anchors) fallback = fallback || a.chebyshev_fallback;
  if (fallback) d.warnings.push_back("regions anchored at Chebyshev centers (dimension above the vertex budget)");
  finish(d);
  return d;
}

ForecastDistribution mix_forecasts(const std::vector<ForecastDistribution>& per_config,
                                   const std::vector<double>& probabilities, std::optional<int> observed) {
  const int k_count = static_cast<int>(probabilities.size());
  if (observed) {
    if (*observed < 0 || *observed >= k_count) throw InvalidInput("observed configuration out of range");
    ForecastDistribution d = per_config.at(*observed);
    return d;
  }
  ForecastDistribution d;
  double covered = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const double p = probabilities[k];
    if (p == 0.0) continue;
    const ForecastDistribution& f = per_config.at(k);
    for (const auto& e : f.entries) {
      ForecastEntry m = e;
      m.configuration = k;
      m.probability = p * e.probability;
      m.standard_error = p * e.standard_error;
      d.entries.push_back(std::move(m));
      covered += d.entries.back().probability;
    }
    for (const auto& w : f.warnings) d.warnings.push_back("configuration " + std::to_string(k) + ": " + w);
    d.plain_monte_carlo = d.plain_monte_carlo || f.plain_monte_carlo;
    d.horizon = f.horizon;
    d.seed = f.seed;
    d.samples = f.samples;
    d.issue_time = f.issue_time;
    d.method = f.method;
  }
  d.method += "+contingencies";
  d.unexplored_mass = std::max(0.0, 1.0 - covered);
  return d;
}

ForecastDistribution forecast_with_contingencies(const std::vector<const RegionStore*>& stores,
                                                 const ContingencyModel& model, const ConditionalLaw& law,
                                                 std::optional<int> observed, const ForecastOptions& options) {
  validate(model);
  const std::vector<double> p = model.probabilities();
  const int k_count = static_cast<int>(p.size());
  if (static_cast<int>(stores.size()) != k_count)
    throw InvalidInput("need one region store slot per configuration");
  std::vector<ForecastDistribution> per(k_count);
  for (int k = 0; k < k_count; ++k) {
    const bool needed = observed ? *observed == k : p[k] > 0.0;
    if (!needed) continue;
    if (!stores[k]) throw InvalidInput("missing region store for configuration " + std::to_string(k));
    ForecastOptions o = options;
    o.seed = split_seed(options.seed, static_cast<std::uint64_t>(k));
    per[k] = forecast_regions(*stores[k], law, o);
    for (auto& e : per[k].entries) e.configuration = k;
    per[k].seed = options.seed;
  }
  return mix_forecasts(per, p, observed);
}

ForecastDistribution forecast_lmp_density_quadratic(const RegionStore& store, const ConditionalLaw& law,
                                                    const ForecastOptions& options) {
  check_law(store, law);
  for (const auto* r : store.all())
    if (r->price_kind != PriceMapKind::Affine) throw InvalidInput("store holds constant-price regions");
  ForecastDistribution d = forecast_regions(store, law, options);
  d.method = "quadratic-mixture/" + d.method;
  for (auto& e : d.entries) {
    const CriticalRegion& r = store.region(e.region);
    e.price_gain = r.price_gain;
    e.price_offset = r.price_offset;
    e.component_mean = r.price_gain * law.mean + r.price_offset;
    e.component_covariance = r.price_gain * law.covariance * r.price_gain.transpose();
    const int nb = static_cast<int>(r.price_offset.size());
    e.codomain_lo.resize(nb);
    e.codomain_hi.resize(nb);
    for (int b = 0; b < nb; ++b) {
      const VectorXd u = r.price_gain.row(b).transpose();
      if (u.lpNorm<Eigen::Infinity>() == 0.0) {
        e.codomain_lo(b) = e.codomain_hi(b) = r.price_offset(b);
        continue;
      }
      const VectorXd lo = lp_minimize(u, r.polytope.C, r.polytope.e);
      const VectorXd hi = lp_minimize(-u, r.polytope.C, r.polytope.e);
      e.codomain_lo(b) = u.dot(lo) + r.price_offset(b);
      e.codomain_hi(b) = u.dot(hi) + r.price_offset(b);
    }
  }
  return d;
}

double mixture_marginal_cdf(const ForecastDistribution& dist, int bus, double x) {
  double total = 0.0;
  for (const auto& e : dist.entries) {
    if (e.component_mean.size() <= bus) throw InvalidInput("forecast has no price components for this bus");
    const double m = e.component_mean(bus);
    const double var = e.component_covariance(bus, bus);
    const double s = std::sqrt(std::max(0.0, var));
    if (s <= 1e-12 * std::max(1.0, std::abs(m))) {
      if (x >= e.codomain_lo(bus)) total += e.probability;
      continue;
    }
    const double lo = e.codomain_lo(bus), hi = e.codomain_hi(bus);
    if (x < lo) continue;
    total += std::max(0.0, normal_cdf((std::min(x, hi) - m) / s) - normal_cdf((lo - m) / s));
  }
  return total;
}

double mixture_marginal_density(const ForecastDistribution& dist, int bus, double x) {
  double total = 0.0;
  for (const auto& e : dist.entries) {
    const double m = e.component_mean(bus);
    const double s = std::sqrt(std::max(0.0, e.component_covariance(bus, bus)));
    if (s <= 1e-12 * std::max(1.0, std::abs(m))) continue;
    if (x < e.codomain_lo(bus) || x > e.codomain_hi(bus)) continue;
    const double z = (x - m) / s;
    total += std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
  }
  return total;
}

MatrixXd sample_region_prices(const CriticalRegion& region, const ConditionalLaw& law, long long count,
                              std::uint64_t seed, long long max_attempts) {
  GaussianSampler sampler(law.covariance);
  Rng rng(seed);
  const int nb = static_cast<int>(region.price.size());
  MatrixXd out(count, nb);
  long long got = 0, tries = 0;
  while (got < count) {
    if (++tries > max_attempts) throw NumericalFailure("region has too little probability mass to sample");
    const VectorXd s = law.mean + sampler.draw(rng);
    if (!region.polytope.contains(s, 0.0)) continue;
    out.row(got++) = region.lmp_at(s).transpose();
  }
  return out;
}

}  // namespace lmpf
