#include <benchmark/benchmark.h>

#include <omp.h>

#include "lmpf/case_io.hpp"
#include "lmpf/dcrg.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/mpp.hpp"
#include "lmpf/regions.hpp"
#include "lmpf/stochastic.hpp"

#ifndef LMPF_DATA_DIR
#define LMPF_DATA_DIR "data"
#endif

namespace {

using namespace lmpf;

struct Fixture {
  MppProblem program;
  RegionStore store;
  std::vector<Anchor> anchors;
  ConditionalLaw law;
  Eigen::MatrixXd thetas;

  Fixture() {
    const CaseDocument doc = read_case_file(std::string(LMPF_DATA_DIR) + "/cases/wind12.json");
    const ScenarioModel model = load_scenario(read_text_file(std::string(LMPF_DATA_DIR) + "/scenarios/wind12_ramp.json"));
    program = build_mpp(snapshot_at(doc.grid, doc.schedule, 10));
    store = enumerate_regions(program);
    anchors = region_anchors(store);
    law = conditional_law(model, model.mean_trajectory[6], 6, 4);
    thetas = draw_parameters(law, 4000, 11, program.box_lo, program.box_hi);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

int workers(const benchmark::State& state) { return state.range(0) == 0 ? 1 : omp_get_max_threads(); }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_ImportanceSampling(benchmark::State& state) {
  const auto& f = fixture();
  ForecastOptions fo;
  fo.samples = 2048;
  fo.workers = workers(state);
  for (auto _ : state) benchmark::DoNotOptimize(forecast_regions(f.store, f.law, f.anchors, fo));
  label(state);
}

void BM_PlainMonteCarlo(benchmark::State& state) {
  const auto& f = fixture();
  ForecastOptions fo;
  fo.samples = 20'000;
  fo.workers = workers(state);
  for (auto _ : state) benchmark::DoNotOptimize(forecast_plain_mc(f.store, f.law, fo));
  label(state);
}

void BM_Dcrg(benchmark::State& state) {
  const auto& f = fixture();
  DcrgOptions opt;
  opt.workers = workers(state);
  for (auto _ : state) {
    DcrgCache cache = make_dcrg_cache(f.program);
    benchmark::DoNotOptimize(dcrg_simulate(f.program, f.thetas, cache, opt));
  }
  label(state);
}

void BM_DirectSolves(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(direct_simulate(f.program, f.thetas, workers(state)));
  label(state);
}

BENCHMARK(BM_ImportanceSampling)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlainMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dcrg)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DirectSolves)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
