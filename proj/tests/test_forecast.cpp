#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lmpf/errors.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/opf.hpp"
#include "test_support.hpp"

using namespace lmpf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

RegionStore three_bus_store(int k = 0) {
  const CaseDocument doc = three_bus_document();
  const GridCase g = apply_contingency(doc.grid, doc.contingencies, k);
  RegionStore store = enumerate_regions(build_mpp(SystemSnapshot::from(g)));
  return store;
}

ConditionalLaw law1(double mean, double sd) {
  ConditionalLaw law;
  law.mean = vec1(mean);
  law.covariance = MatrixXd::Constant(1, 1, sd * sd);
  law.horizon = 1;
  return law;
}

double interval_mass(double lo, double hi, double mean, double sd) {
  return phi((hi - mean) / sd) - phi((lo - mean) / sd);
}

double probability_at(const ForecastDistribution& d, const RegionStore& store, double theta) {
  const int id = *store.locate(vec1(theta));
  return d.entries[*d.find(store.configuration(), id)].probability;
}

// Two generators with quadratic cost; the cheaper one saturates at 50 MW,
// which splits the load axis into two regions with different price slopes.
GridCase two_region_quadratic() {
  GridCase g;
  g.bus_count = 2;
  g.reference_bus = 2;
  g.cost_kind = CostKind::Quadratic;
  g.lines.push_back({1, 1, 2, 0.1, -1000, 1000, true});
  g.generators.push_back({1, 1, 5.0, 0.1, 0, 50});
  g.generators.push_back({2, 2, 5.0, 0.1, 0, 400});
  g.stochastic_units.push_back({1, 1, UnitKind::Load, 0, 300});
  return g;
}

}  // namespace

TEST_CASE("region probabilities match Gaussian interval masses") {
  const RegionStore store = three_bus_store();
  REQUIRE(store.size() == 3);
  ForecastOptions opt;
  opt.samples = 100000;
  opt.seed = 2024;
  for (auto [mean, sd] : {std::pair{150.0, 10.0}, {165.0, 20.0}, {128.0, 6.0}}) {
    CAPTURE(mean);
    const auto d = forecast_regions(store, law1(mean, sd), opt);
    CHECK_FALSE(d.plain_monte_carlo);
    CHECK(std::abs(probability_at(d, store, 50) - interval_mass(0, 130, mean, sd)) < 1e-3);
    CHECK(std::abs(probability_at(d, store, 150) - interval_mass(130, 170, mean, sd)) < 1e-3);
    CHECK(std::abs(probability_at(d, store, 190) - interval_mass(170, 200, mean, sd)) < 1e-3);
    CHECK(d.unexplored_mass == doctest::Approx(std::max(0.0, 1.0 - d.total())));
    for (const auto& e : d.entries) CHECK(e.standard_error < 2e-3);
  }
}

TEST_CASE("importance sampling agrees with plain Monte Carlo") {
  const RegionStore store = three_bus_store();
  ForecastOptions opt;
  opt.samples = 100000;
  opt.seed = 77;
  const auto law = law1(160.0, 15.0);
  const auto is = forecast_regions(store, law, opt);
  const auto mc = forecast_plain_mc(store, law, opt);
  CHECK(mc.plain_monte_carlo);
  for (int i = 0; i < store.size(); ++i) {
    const auto& a = is.entries[i];
    const auto& b = mc.entries[i];
    CHECK(std::abs(a.probability - b.probability) <
          3.0 * std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error));
  }
}

TEST_CASE("concentrated and symmetric laws") {
  const RegionStore store = three_bus_store();
  ForecastOptions opt;
  opt.samples = 40000;
  SUBCASE("deep inside one region") {
    const auto d = forecast_regions(store, law1(60.0, 2.0), opt);
    CHECK(probability_at(d, store, 60) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probability_at(d, store, 150) < 1e-9);
    CHECK(probability_at(d, store, 190) < 1e-9);
  }
  SUBCASE("centered on a boundary") {
    const auto d = forecast_regions(store, law1(130.0, 4.0), opt);
    CHECK(std::abs(probability_at(d, store, 60) - 0.5) < 5e-3);
    CHECK(std::abs(probability_at(d, store, 150) - 0.5) < 5e-3);
  }
  SUBCASE("anchor-only proposal") {
    opt.proposal = ProposalKind::AnchorOnly;
    const auto d = forecast_regions(store, law1(150.0, 10.0), opt);
    CHECK(std::abs(probability_at(d, store, 150) - interval_mass(130, 170, 150, 10)) < 5e-3);
  }
}

TEST_CASE("forecasts do not depend on the worker count") {
  const RegionStore store = three_bus_store();
  ForecastOptions opt;
  opt.samples = 20000;
  opt.seed = 5;
  const auto serial = forecast_regions(store, law1(155.0, 12.0), opt);
  opt.workers = 4;
  const auto parallel = forecast_regions(store, law1(155.0, 12.0), opt);
  const auto mc_serial = forecast_plain_mc(store, law1(155.0, 12.0), opt);
  opt.workers = 1;
  const auto mc_parallel = forecast_plain_mc(store, law1(155.0, 12.0), opt);
  for (int i = 0; i < store.size(); ++i) {
    CHECK(serial.entries[i].probability == parallel.entries[i].probability);
    CHECK(mc_serial.entries[i].probability == mc_parallel.entries[i].probability);
  }
}

TEST_CASE("point-mass law falls back to plain Monte Carlo") {
  const RegionStore store = three_bus_store();
  ConditionalLaw law = law1(150.0, 0.0);
  law.horizon = 0;
  const auto d = forecast_regions(store, law);
  CHECK(d.plain_monte_carlo);
  CHECK_FALSE(d.warnings.empty());
  CHECK(probability_at(d, store, 150) == 1.0);
  CHECK(d.unexplored_mass == 0.0);
}

TEST_CASE("mass outside the box is reported as unexplored") {
  const RegionStore store = three_bus_store();
  ForecastOptions opt;
  opt.samples = 50000;
  const auto d = forecast_regions(store, law1(200.0, 10.0), opt);
  CHECK(std::abs(d.unexplored_mass - 0.5) < 1e-2);
}

TEST_CASE("forecast input errors") {
  const RegionStore store = three_bus_store();
  ConditionalLaw bad;
  bad.mean = VectorXd::Zero(2);
  bad.covariance = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(forecast_regions(store, bad), InvalidInput);
  CHECK_THROWS_AS(forecast_regions(RegionStore{}, law1(1, 1)), InvalidInput);
  ForecastOptions opt;
  opt.samples = 0;
  CHECK_THROWS_AS(forecast_regions(store, law1(1, 1), opt), InvalidInput);
}

TEST_CASE("contingency mixture is the weighted sum of configuration forecasts") {
  CaseDocument doc = three_bus_document();
  const RegionStore s0 = three_bus_store(0);
  const RegionStore s1 = three_bus_store(1);
  CHECK(s1.configuration() == 0);
  const std::vector<const RegionStore*> stores{&s0, &s1};
  const auto law = law1(140.0, 15.0);
  ForecastOptions opt;
  opt.samples = 20000;
  opt.seed = 99;

  const auto f0 = forecast_with_contingencies(stores, doc.contingencies, law, 0, opt);
  const auto f1 = forecast_with_contingencies(stores, doc.contingencies, law, 1, opt);
  for (double p1 : {0.01, 0.1, 0.5}) {
    CAPTURE(p1);
    doc.contingencies.contingencies[0].probability = p1;
    const auto mix = forecast_with_contingencies(stores, doc.contingencies, law, std::nullopt, opt);
    REQUIRE(mix.entries.size() == f0.entries.size() + f1.entries.size());
    for (const auto& e : mix.entries) {
      const auto& src = e.configuration == 0 ? f0 : f1;
      const double p = e.configuration == 0 ? 1.0 - p1 : p1;
      const auto idx = src.find(e.configuration, e.region);
      REQUIRE(idx);
      CHECK(std::abs(e.probability - p * src.entries[*idx].probability) <= 1e-12);
    }
  }
  CHECK(f1.entries.front().configuration == 1);

  const std::vector<const RegionStore*> missing{&s0, nullptr};
  CHECK_THROWS_AS(forecast_with_contingencies(missing, doc.contingencies, law, std::nullopt, opt), InvalidInput);
  CHECK_NOTHROW(forecast_with_contingencies(missing, doc.contingencies, law, 0, opt));
  CHECK_THROWS_AS(forecast_with_contingencies(stores, doc.contingencies, law, 2, opt), InvalidInput);
}

TEST_CASE("quadratic price law matches direct solves") {
  const GridCase g = two_region_quadratic();
  const SystemSnapshot snap = SystemSnapshot::from(g);
  const MppProblem p = build_mpp(snap);
  const RegionStore store = enumerate_regions(p);
  REQUIRE(store.size() == 2);
  const auto law = law1(110.0, 30.0);
  ForecastOptions opt;
  opt.samples = 50000;
  const auto d = forecast_lmp_density_quadratic(store, law, opt);
  for (const auto& e : d.entries) {
    CHECK(e.component_mean.size() == 2);
    CHECK(e.codomain_lo(0) <= e.codomain_hi(0));
  }

  // Direct sampling: draw theta, keep draws inside the box, solve the QP.
  Rng rng(123);
  std::vector<double> prices;
  while (prices.size() < 20000) {
    const double theta = law.mean(0) + std::sqrt(law.covariance(0, 0)) * rng.gaussian();
    if (theta < 0.0 || theta > 300.0) continue;
    prices.push_back(solve_dcopf(p, vec1(theta)).lmp(0));
  }
  std::sort(prices.begin(), prices.end());
  const double total = d.total();
  double ks = 0.0;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double f = mixture_marginal_cdf(d, 0, prices[i]) / total;
    ks = std::max({ks, std::abs(f - double(i + 1) / prices.size()), std::abs(f - double(i) / prices.size())});
  }
  CHECK(ks < 0.02);
  // Each component carries the exact Gaussian mass of its price range.
  const double in_box = interval_mass(0.0, 300.0, 110.0, 30.0);
  CHECK(mixture_marginal_cdf(d, 0, 1e9) == doctest::Approx(in_box).epsilon(1e-9));
  CHECK(std::abs(total - in_box) < 1e-3);
  CHECK(mixture_marginal_cdf(d, 0, -1e9) == 0.0);
  CHECK(mixture_marginal_density(d, 0, prices[prices.size() / 2]) > 0.0);

  const auto& r = store.region(0);
  const MatrixXd samples = sample_region_prices(r, law, 200, 9);
  const auto& e = d.entries[*d.find(0, r.id)];
  for (int i = 0; i < samples.rows(); ++i) {
    CHECK(samples(i, 0) >= e.codomain_lo(0) - 1e-9);
    CHECK(samples(i, 0) <= e.codomain_hi(0) + 1e-9);
  }

  const RegionStore linear = three_bus_store();
  CHECK_THROWS_AS(forecast_lmp_density_quadratic(linear, law1(100, 10), opt), InvalidInput);
}

TEST_CASE("parameter draws are clamped and reproducible") {
  const auto law = law1(190.0, 20.0);
  const MatrixXd a = draw_parameters(law, 1000, 4, vec1(0.0), vec1(200.0));
  const MatrixXd b = draw_parameters(law, 1000, 4, vec1(0.0), vec1(200.0));
  CHECK(a == b);
  CHECK(a.maxCoeff() <= 200.0);
  CHECK(a.minCoeff() >= 0.0);
}
