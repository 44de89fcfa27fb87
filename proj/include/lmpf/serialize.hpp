#pragma once

#include <string>

#include "lmpf/dcrg.hpp"
#include "lmpf/evaluation.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/opf.hpp"
#include "lmpf/regions.hpp"

namespace lmpf {

/// JSON documents for the artifacts exchanged between commands. Output is
/// deterministic: fixed key order, shortest round-trip doubles, two-space
/// indent, trailing newline.

/// Regions with polytope (C, e), active set, price map, congestion and
/// interior ball. Ids are preserved.
std::string save_region_store(const RegionStore& store);
/// Affine solutions are not stored; call RegionStore::attach with the program
/// the store was built from before evaluating dispatches.
RegionStore load_region_store(const std::string& text);

std::string save_forecast(const ForecastDistribution& dist);
ForecastDistribution load_forecast(const std::string& text);

std::string save_dispatch(const DispatchSolution& sol, const MppProblem& p);

/// Cache counters and per-region visit counts of a simulation run.
std::string save_dcrg_summary(const DcrgCache& cache, const SampleStream& stream, long long direct_solves = -1);
/// One line per sample: index, region, feasible flag, LMP per bus.
std::string sample_stream_csv(const SampleStream& stream);

std::string save_report(const EvaluationReport& report);

}  // namespace lmpf
