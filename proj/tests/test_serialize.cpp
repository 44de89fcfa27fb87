#include <doctest.h>

#include "lmpf/errors.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/serialize.hpp"
#include "test_support.hpp"

using namespace lmpf;
using Eigen::VectorXd;

TEST_CASE("region store round trip") {
  for (const char* file : {"cases/three_bus.json", "cases/quadratic_small.json"}) {
    const MppProblem p = build_mpp(SystemSnapshot::from(read_case_file(data_path(file)).grid));
    const RegionStore store = enumerate_regions(p);
    const std::string text = save_region_store(store);
    RegionStore back = load_region_store(text);
    CHECK(save_region_store(back) == text);
    REQUIRE(back.size() == store.size());
    back.attach(p);
    for (int i = 0; i < store.size(); ++i) {
      const auto& a = store.region(i);
      const auto& b = back.region(i);
      CHECK(a.active == b.active);
      CHECK(a.polytope.C == b.polytope.C);
      CHECK(a.polytope.e == b.polytope.e);
      CHECK(b.has_affine());
      const VectorXd c = a.interior.center;
      CHECK(a.lmp_at(c) == b.lmp_at(c));
      CHECK(back.locate(c) == store.locate(c));
    }
  }
}

TEST_CASE("region store rejects malformed documents") {
  const MppProblem p = build_mpp(SystemSnapshot::from(three_bus_document().grid));
  std::string text = save_region_store(enumerate_regions(p));
  CHECK_THROWS_AS(load_region_store("{"), InvalidInput);
  CHECK_THROWS_AS(load_region_store("{}"), InvalidInput);
  std::string bad = text;
  bad.replace(bad.find("\"id\": 1"), 7, "\"id\": 7");
  CHECK_THROWS_AS(load_region_store(bad), InvalidInput);
  bad = text;
  bad.replace(bad.find("\"constant\""), 10, "\"cubic\"");
  CHECK_THROWS_AS(load_region_store(bad), InvalidInput);
}

TEST_CASE("forecast round trip keeps metadata and entries") {
  const MppProblem p = build_mpp(SystemSnapshot::from(read_case_file(data_path("cases/quadratic_small.json")).grid));
  const RegionStore store = enumerate_regions(p);
  ConditionalLaw law;
  law.mean = p.box_center();
  law.covariance = Eigen::MatrixXd::Identity(p.parameter_count(), p.parameter_count()) * 100.0;
  law.horizon = 3;
  ForecastOptions fo;
  fo.samples = 512;
  fo.seed = 42;
  fo.issue_time = 7;
  const ForecastDistribution d = forecast_lmp_density_quadratic(store, law, fo);
  const std::string text = save_forecast(d);
  const ForecastDistribution back = load_forecast(text);
  CHECK(save_forecast(back) == text);
  CHECK(back.issue_time == 7);
  CHECK(back.horizon == 3);
  CHECK(back.seed == 42);
  CHECK(back.samples == d.samples);
  REQUIRE(back.entries.size() == d.entries.size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    CHECK(back.entries[i].probability == d.entries[i].probability);
    CHECK(back.entries[i].component_covariance == d.entries[i].component_covariance);
  }
}
