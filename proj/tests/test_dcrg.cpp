#include <doctest.h>

#include <cmath>

#include "lmpf/dcrg.hpp"
#include "lmpf/errors.hpp"
#include "test_support.hpp"

using namespace lmpf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MppProblem three_bus_mpp() { return build_mpp(SystemSnapshot::from(three_bus_document().grid)); }

MppProblem wind_mpp(const std::string& name) {
  return build_mpp(SystemSnapshot::from(read_case_file(data_path("cases/" + name)).grid));
}

ConditionalLaw wind_law() {
  const ScenarioModel m = load_scenario(read_text_file(data_path("scenarios/wind12_ramp.json")));
  return conditional_law(m, m.mean_trajectory[0], 0, 10);
}

ConditionalLaw law1(double mean, double sd) {
  ConditionalLaw law;
  law.mean = vec1(mean);
  law.covariance = MatrixXd::Constant(1, 1, sd * sd);
  return law;
}

bool same_stream(const SampleStream& a, const SampleStream& b) {
  if (a.size() != b.size()) return false;
  for (long long i = 0; i < a.size(); ++i) {
    if (a.feasible[i] != b.feasible[i]) return false;
    if (!a.feasible[i]) continue;
    for (int k = 0; k < a.lmp.cols(); ++k)
      if (a.lmp(i, k) != b.lmp(i, k)) return false;
    if (a.congestion[i] != b.congestion[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("samples in one region cost one solve") {
  const MppProblem p = three_bus_mpp();
  DcrgCache cache = make_dcrg_cache(p);
  const SampleStream s = dcrg_simulate(p, law1(60.0, 5.0), 2000, 3, cache);
  CHECK(cache.counters.opf_solves == 1);
  CHECK(cache.counters.cache_hits == 1999);
  CHECK(cache.store.size() == 1);
  for (long long i = 0; i < s.size(); ++i) CHECK(s.lmp(i, 1) == 10.0);
}

TEST_CASE("three-bus stream equals direct solving") {
  const MppProblem p = three_bus_mpp();
  const MatrixXd thetas = draw_parameters(law1(150.0, 30.0), 3000, 8, p.box_lo, p.box_hi);
  DcrgCache cache = make_dcrg_cache(p);
  const SampleStream fast = dcrg_simulate(p, thetas, cache);
  const SampleStream direct = direct_simulate(p, thetas);
  CHECK(same_stream(fast, direct));
  CHECK(cache.store.size() == 3);
  CHECK(cache.counters.opf_solves == cache.counters.regions);
  CHECK(cache.counters.cache_hits + cache.counters.opf_solves == cache.counters.samples);
  const auto visits = region_visits(fast, cache.store.size());
  long long total = 0;
  for (auto v : visits) total += v;
  CHECK(total == 3000);
}

TEST_CASE("an offline store answers every sample") {
  const MppProblem p = three_bus_mpp();
  DcrgCache cache{enumerate_regions(p), {}};
  const SampleStream s = dcrg_simulate(p, law1(150.0, 30.0), 1000, 2, cache);
  CHECK(cache.counters.opf_solves == 0);
  CHECK(cache.counters.cache_hits == 1000);
  const MatrixXd thetas = draw_parameters(law1(150.0, 30.0), 1000, 2, p.box_lo, p.box_hi);
  CHECK(same_stream(s, direct_simulate(p, thetas)));
}

TEST_CASE("infeasible samples are counted and excluded") {
  const MppProblem p = three_bus_mpp();
  MatrixXd thetas(4, 1);
  thetas << 50, 400, 150, 500;
  DcrgCache cache = make_dcrg_cache(p);
  const SampleStream s = dcrg_simulate(p, thetas, cache);
  CHECK(cache.counters.infeasible == 2);
  CHECK(s.feasible == std::vector<char>{1, 0, 1, 0});
  CHECK(std::isnan(s.lmp(1, 0)));
  CHECK(s.region[1] == -1);
  CHECK(cache.counters.opf_solves == 4);
  CHECK(cache.counters.regions == 2);
}

TEST_CASE("mismatched inputs are rejected") {
  const MppProblem p = three_bus_mpp();
  DcrgCache cache = make_dcrg_cache(p);
  CHECK_THROWS_AS(dcrg_simulate(p, MatrixXd::Zero(3, 2), cache), InvalidInput);
  DcrgCache other = make_dcrg_cache(wind_mpp("wind12.json"));
  CHECK_THROWS_AS(dcrg_simulate(p, MatrixXd::Zero(3, 1), other), InvalidInput);
}

TEST_CASE("wind case: exact stream and few solves") {
  for (const char* name : {"wind12.json", "wind12_quadratic.json"}) {
    CAPTURE(name);
    const MppProblem p = wind_mpp(name);
    REQUIRE(p.parameter_count() == 12);
    const MatrixXd thetas = draw_parameters(wind_law(), 2000, 13, p.box_lo, p.box_hi);
    DcrgCache cache = make_dcrg_cache(p);
    const SampleStream fast = dcrg_simulate(p, thetas, cache);
    CHECK(same_stream(fast, direct_simulate(p, thetas)));
    CHECK(cache.counters.opf_solves == cache.store.size());
    CHECK(cache.counters.degenerate == 0);
    CHECK(cache.counters.opf_solves < 50);

    SUBCASE("parallel workers give the same prices") {
      DcrgCache shared = make_dcrg_cache(p);
      DcrgOptions opt;
      opt.workers = 4;
      const SampleStream par = dcrg_simulate(p, thetas, shared, opt);
      CHECK(same_stream(par, fast));
      CHECK(shared.counters.cache_hits + shared.counters.opf_solves == 2000);
      CHECK(shared.store.size() == cache.store.size());
      CHECK(same_stream(direct_simulate(p, thetas, 4), fast));
    }
  }
}
