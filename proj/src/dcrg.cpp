#include "lmpf/dcrg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "lmpf/errors.hpp"
#include "lmpf/stochastic.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SampleStream empty_stream(long long n, int buses) {
  SampleStream s;
  s.lmp = MatrixXd::Constant(n, buses, std::numeric_limits<double>::quiet_NaN());
  s.congestion.resize(n);
  s.region.assign(n, -1);
  s.feasible.assign(n, 0);
  return s;
}

void emit(SampleStream& s, long long i, const MppProblem& p, const DispatchSolution& sol, int region) {
  s.lmp.row(i) = sol.lmp.transpose();
  s.congestion[i] = extract_congestion(sol, p);
  s.region[i] = region;
  s.feasible[i] = 1;
}

void check_thetas(const MppProblem& p, const MatrixXd& thetas) {
  if (thetas.cols() != p.parameter_count())
    throw InvalidInput("samples have " + std::to_string(thetas.cols()) + " columns, the program has " +
                       std::to_string(p.parameter_count()) + " parameters");
}

// Runs body(i) for every sample, serially or across workers, and rethrows
// the first library error after the loop.
template <class Body>
void for_each_sample(long long n, int workers, Body body) {
  if (workers <= 1) {
    for (long long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 16) num_threads(workers)
  for (long long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

DcrgCache make_dcrg_cache(const MppProblem& p, int configuration) {
  return DcrgCache{RegionStore(p.parameter_count(), p.cost_kind, Provenance::Dcrg, configuration), {}};
}

SampleStream dcrg_simulate(const MppProblem& p, const MatrixXd& thetas, DcrgCache& cache,
                           const DcrgOptions& options) {
  check_thetas(p, thetas);
  RegionStore& store = cache.store;
  if (store.parameter_count() != p.parameter_count())
    throw InvalidInput("cache was grown from a program with a different parameter count");
  bool needs_attach = false;
  for (const auto* r : store.all()) needs_attach = needs_attach || !r->has_affine();
  if (needs_attach) store.attach(p);

  const long long n = thetas.rows();
  SampleStream out = empty_stream(n, p.bus_count);
  std::atomic<long long> hits{0}, solves{0}, added{0}, infeasible{0}, degenerate{0};
  RegionOptions build;
  build.reduce = false;

  for_each_sample(n, options.workers, [&](long long i) {
    const VectorXd theta = thetas.row(i).transpose();
    if (auto id = store.locate(theta, options.locate_tol)) {
      const CriticalRegion& r = store.region(*id);
      emit(out, i, p, evaluate_affine(p, r.affine, theta), *id);
      ++hits;
      return;
    }
    ++solves;
    DispatchSolution sol;
    try {
      sol = solve_dcopf(p, theta, options.solve);
    } catch (const Infeasible&) {
      ++infeasible;
      return;
    }
    int id = -1;
    if (sol.from_basis) {
      if (auto found = store.find(sol.active)) {
        id = *found;
      } else {
        try {
          const auto [rid, inserted] = store.insert(region_from_active_set(p, sol.active, build));
          id = rid;
          if (inserted) ++added;
        } catch (const Degenerate&) {
        } catch (const EmptyRegion&) {
        }
      }
    }
    if (id < 0) ++degenerate;
    emit(out, i, p, sol, id);
  });

  cache.counters.samples += n;
  cache.counters.cache_hits += hits;
  cache.counters.opf_solves += solves;
  cache.counters.regions += added;
  cache.counters.infeasible += infeasible;
  cache.counters.degenerate += degenerate;
  return out;
}

SampleStream dcrg_simulate(const MppProblem& p, const ConditionalLaw& law, long long count, std::uint64_t seed,
                           DcrgCache& cache, const DcrgOptions& options) {
  if (law.dimension() != p.parameter_count()) throw InvalidInput("law dimension does not match the program");
  return dcrg_simulate(p, draw_parameters(law, count, seed, p.box_lo, p.box_hi), cache, options);
}

SampleStream direct_simulate(const MppProblem& p, const MatrixXd& thetas, int workers, const SolveOptions& solve) {
  check_thetas(p, thetas);
  const long long n = thetas.rows();
  SampleStream out = empty_stream(n, p.bus_count);
  for_each_sample(n, workers, [&](long long i) {
    try {
      emit(out, i, p, solve_dcopf(p, thetas.row(i).transpose(), solve), -1);
    } catch (const Infeasible&) {
    }
  });
  return out;
}

std::vector<long long> region_visits(const SampleStream& stream, int region_count) {
  std::vector<long long> visits(region_count, 0);
  for (int id : stream.region)
    if (id >= 0 && id < region_count) ++visits[id];
  return visits;
}

ForecastDistribution forecast_dcrg(const MppProblem& p, const ConditionalLaw& law, long long count,
                                   std::uint64_t seed, DcrgCache& cache, const DcrgOptions& options) {
  if (count < 1) throw InvalidInput("sample count must be at least 1");
  if (law.dimension() != p.parameter_count()) throw InvalidInput("law and program have different dimensions");
  const double inf = std::numeric_limits<double>::infinity();
  const MatrixXd all = draw_parameters(law, count, seed, VectorXd::Constant(law.dimension(), -inf),
                                       VectorXd::Constant(law.dimension(), inf));
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < all.rows(); ++i)
    if ((all.row(i).transpose().array() >= p.box_lo.array()).all() &&
        (all.row(i).transpose().array() <= p.box_hi.array()).all())
      inside.push_back(i);
  MatrixXd thetas(static_cast<Eigen::Index>(inside.size()), all.cols());
  for (std::size_t k = 0; k < inside.size(); ++k) thetas.row(static_cast<Eigen::Index>(k)) = all.row(inside[k]);
  const SampleStream stream = dcrg_simulate(p, thetas, cache, options);
  const auto visits = region_visits(stream, cache.store.size());

  ForecastDistribution d;
  d.method = "dcrg";
  d.plain_monte_carlo = true;
  d.horizon = law.horizon;
  d.seed = seed;
  d.samples = count;
  const double n = static_cast<double>(count);
  double total = 0.0;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const CriticalRegion& r = cache.store.region(static_cast<int>(i));
    ForecastEntry e;
    e.configuration = r.configuration;
    e.region = r.id;
    e.lmp = r.price;
    e.congestion = r.congestion;
    e.probability = static_cast<double>(visits[i]) / n;
    e.standard_error = std::sqrt(e.probability * (1.0 - e.probability) / n);
    total += e.probability;
    d.entries.push_back(std::move(e));
  }
  d.unexplored_mass = std::max(0.0, 1.0 - total);
  return d;
}

}  // namespace lmpf
